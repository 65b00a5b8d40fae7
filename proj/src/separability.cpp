#include "phrev/separability.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "simplex.hpp"

namespace phrev {

namespace {

std::string pair_label(const char* tag, std::size_t t, std::size_t s) {
  return std::string(tag) + "[" + std::to_string(t + 1) + "," + std::to_string(s + 1) + "]";
}

bool positive_vector(const Vector& v, Eigen::Index size) {
  if (v.size() != size) return false;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0) || !std::isfinite(v[i])) return false;
  }
  return true;
}

}  // namespace

SeparabilityInstance::SeparabilityInstance(PartitionedStatistics part)
    : part_(std::move(part)) {
  const MarketStatistics& y = part_.y_data();
  const MarketStatistics& q = part_.q_data();
  const std::size_t T = y.periods();
  xy_.resize(T, T);
  pq_.resize(T, T);
  for (std::size_t a = 0; a < T; ++a) {
    for (std::size_t b = 0; b < T; ++b) {
      xy_(a, b) = y.cost(a, b);
      pq_(a, b) = q.cost(a, b);
    }
  }
}

MacroUtility::MacroUtility(Vector mus, Vector lambdas, Matrix q_prices)
    : mus_(std::move(mus)), lambdas_(std::move(lambdas)), q_prices_(std::move(q_prices)) {
  const Eigen::Index T = q_prices_.rows();
  if (T == 0 || !positive_vector(mus_, T) || !positive_vector(lambdas_, T)) {
    throw Error(ErrorCode::kInvalidMultipliers,
                "macro utility needs one positive mu and lambda per price row");
  }
}

double MacroUtility::operator()(const Vector& q, double z) const {
  if (q.size() != q_prices_.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "bundle dimension mismatch");
  }
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < q_prices_.rows(); ++t) {
    best = std::min(best, mus_[t] * (q_prices_.row(t).dot(q) + z / lambdas_[t]));
  }
  return best;
}

LogConvexProgram build_separability_program(const SeparabilityInstance& inst) {
  const std::size_t T = inst.periods();
  LogConvexProgram prog;
  std::vector<std::size_t> lam(T);
  std::vector<std::size_t> mu(T);
  for (std::size_t t = 0; t < T; ++t) {
    lam[t] = prog.add_variable("lam[" + std::to_string(t + 1) + "]", VariableKind::kLog);
  }
  for (std::size_t t = 0; t < T; ++t) {
    mu[t] = prog.add_variable("mu[" + std::to_string(t + 1) + "]", VariableKind::kLog);
  }
  const std::size_t gamma = prog.add_variable("gamma", VariableKind::kSlack);

  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < T; ++s) {
      ConstraintRecord c;
      c.label = pair_label("i", t, s);
      c.lhs_affine.constant = std::log(inst.xy(t, t));
      c.lhs_affine.add(lam[t], 1.0);
      c.rhs_affine.constant = std::log(inst.xy(s, t));
      c.rhs_affine.add(lam[s], 1.0);
      prog.add_constraint(std::move(c));
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < T; ++s) {
      const double A = inst.pq(s, t);
      const double B = inst.xy(t, t);
      ConstraintRecord c;
      c.label = pair_label("ii", t, s);
      c.lhs_affine.constant = std::log(inst.expenditure(t));
      c.lhs_affine.add(mu[t], 1.0).add(lam[s], 1.0);
      c.rhs_affine.add(mu[s], 1.0);
      LogResidual r;
      r.K = A + B;
      for (std::size_t i = 0; i < T; ++i) {
        const double D = (i != s ? A : 0.0) + (i != t ? B : 0.0);
        if (D <= 0.0) continue;
        ExpTerm e;
        e.coeff = D;
        e.exponent.add(lam[i], 1.0);
        r.terms.push_back(std::move(e));
      }
      c.rhs_logres = std::move(r);
      prog.add_constraint(std::move(c));
    }
  }
  {
    ConstraintRecord c;
    c.label = "norm";
    c.tight = true;
    LogSumExp lse;
    for (std::size_t i = 0; i < T; ++i) {
      ExpTerm e;
      e.exponent.add(lam[i], 1.0);
      lse.terms.push_back(std::move(e));
    }
    c.lhs_lse = std::move(lse);
    LogResidual r;
    r.K = 1.0;
    r.linear.add(gamma, -1.0);
    c.rhs_logres = std::move(r);
    prog.add_constraint(std::move(c));
  }

  // Σ e^lam = 1/2 and gamma at half the remaining room.
  for (std::size_t t = 0; t < T; ++t) {
    prog.set_start(lam[t], -std::log(2.0 * static_cast<double>(T)));
    prog.set_start(mu[t], -std::log(inst.expenditure(t)));
  }
  prog.set_start(gamma, 0.25);
  return prog;
}

bool verify_separability_solution(const SeparabilityInstance& inst, const Vector& lambdas,
                                  const Vector& mus, double tol) {
  const std::size_t T = inst.periods();
  const Eigen::Index TT = static_cast<Eigen::Index>(T);
  if (!positive_vector(lambdas, TT) || !positive_vector(mus, TT)) return false;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < T; ++s) {
      const double l_t = lambdas[static_cast<Eigen::Index>(t)];
      const double l_s = lambdas[static_cast<Eigen::Index>(s)];
      if (l_t * inst.xy(t, t) > l_s * inst.xy(s, t) * (1.0 + tol)) return false;
      const double lhs = mus[static_cast<Eigen::Index>(t)] * l_s * inst.expenditure(t);
      const double rhs = mus[static_cast<Eigen::Index>(s)] *
                         (l_s * inst.pq(s, t) + l_t * inst.xy(t, t));
      if (lhs > rhs * (1.0 + tol)) return false;
    }
  }
  return true;
}

PiecewiseLinearUtility reconstruct_subutility(const Vector& lambdas, const Matrix& y_prices) {
  if (y_prices.rows() == 0 || !positive_vector(lambdas, y_prices.rows())) {
    throw Error(ErrorCode::kInvalidMultipliers,
                "subutility needs one positive multiplier per period");
  }
  return PiecewiseLinearUtility(lambdas, y_prices);
}

MacroUtility reconstruct_macro_utility(const Vector& mus, const Vector& lambdas,
                                       const Matrix& q_prices) {
  return MacroUtility(mus, lambdas, q_prices);
}

double young_transform(const PiecewiseLinearUtility& u, const Vector& w) {
  if (static_cast<std::size_t>(w.size()) != u.dimension()) {
    throw Error(ErrorCode::kShapeMismatch, "price vector dimension mismatch");
  }
  if (!positive_vector(w, w.size())) {
    throw Error(ErrorCode::kInvalidArgument, "prices must be positive");
  }
  // Column t of A is λ_t x^t.
  Matrix A = u.price_rows().transpose();
  for (Eigen::Index t = 0; t < A.cols(); ++t) A.col(t) *= u.weights()[t];
  const Vector ones = Vector::Ones(A.cols());
  return detail::maximize_packing(A, w, ones).value;
}

namespace {

// μ with λ fixed: log μ_t − log μ_s <= log((λ_s A + λ_t B) / (λ_s E^t)).
std::optional<Vector> polish_mus(const SeparabilityInstance& inst, const Vector& lambdas) {
  const std::size_t T = inst.periods();
  Matrix bound = Matrix::Zero(T, T);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < T; ++s) {
      if (s == t) continue;
      const double l_t = lambdas[static_cast<Eigen::Index>(t)];
      const double l_s = lambdas[static_cast<Eigen::Index>(s)];
      bound(s, t) = std::log((l_s * inst.pq(s, t) + l_t * inst.xy(t, t)) /
                             (l_s * inst.expenditure(t)));
    }
  }
  const DifferenceSolution sol = solve_difference_constraints(bound);
  if (!sol.potentials) return std::nullopt;
  return sol.potentials->array().exp().matrix();
}

Vector normalize_max(Vector v) {
  return v / v.maxCoeff();
}

void reject_by_cycle(SeparabilityResult& out, const HarpResult& harp, const char* where) {
  out.decision.status = Status::kInfeasible;
  out.decision.detail = std::string("HARP fails on the ") + where + ": " + harp.decision.detail;
  out.cycle = harp.cycle;
  const auto& p = harp.cycle->periods;
  for (std::size_t j = 0; j + 1 < p.size(); ++j) {
    // Edge a -> b bounds lam_b − lam_a, i.e. constraint i[b,a].
    out.violations.push_back(pair_label("i", p[j + 1], p[j]));
  }
}

}  // namespace

SeparabilityResult check_separability(const PartitionedStatistics& part,
                                      const SeparabilityTolerances& tols,
                                      const SolveOptions& options) {
  if (!(tols.accept > 0.0) || !(tols.accept < tols.reject)) {
    throw Error(ErrorCode::kInvalidArgument, "need 0 < tol_accept < tol_reject");
  }
  SeparabilityResult out;
  const SeparabilityInstance inst(part);

  const HarpResult y_harp = check_harp(part.y_data());
  if (y_harp.decision.status == Status::kInfeasible) {
    reject_by_cycle(out, y_harp, "y-block");
    return out;
  }
  const HarpResult full_harp = check_harp(part.base());
  if (full_harp.decision.status == Status::kInfeasible) {
    out.decision.status = Status::kInfeasible;
    out.decision.detail = "HARP fails on the full data: " + full_harp.decision.detail;
    out.cycle = full_harp.cycle;
    return out;
  }

  const LogConvexProgram prog = build_separability_program(inst);
  const SolveResult sol = solve(prog, options);
  out.iterations = sol.iterations;
  out.lower_bound = sol.lower_bound;
  if (std::isfinite(sol.objective)) out.decision.optimum = sol.objective;

  const std::size_t T = inst.periods();
  const Eigen::Index TT = static_cast<Eigen::Index>(T);
  out.lambdas = sol.point.head(TT).array().exp().matrix();
  out.lambdas /= out.lambdas.sum();
  out.mus = normalize_max(sol.point.segment(TT, TT).array().exp().matrix());

  auto record_violations = [&]() {
    for (const ConstraintRecord& c : prog.constraints()) {
      if (eval_constraint(c, sol.point) > options.eps) out.violations.push_back(c.label);
    }
  };

  if (sol.status == Status::kInfeasible || sol.lower_bound >= tols.reject) {
    out.decision.status = Status::kInfeasible;
    out.decision.detail = "solver: " + sol.detail;
    record_violations();
    return out;
  }
  if (sol.status != Status::kFeasible || sol.objective > tols.accept) {
    out.decision.status = Status::kUndecided;
    out.decision.detail = "solver: " + sol.detail;
    return out;
  }

  if (!verify_separability_solution(inst, out.lambdas, out.mus, tols.accept)) {
    const auto polished = polish_mus(inst, out.lambdas);
    if (polished) out.mus = normalize_max(*polished);
    if (!polished || !verify_separability_solution(inst, out.lambdas, out.mus, tols.accept)) {
      out.decision.status = Status::kUndecided;
      out.decision.detail = "solver point does not verify against the original inequalities";
      record_violations();
      return out;
    }
  }
  out.decision.status = Status::kFeasible;
  out.decision.detail = "verified multipliers";
  out.subutility = reconstruct_subutility(out.lambdas, part.y_data().prices());
  out.macro = reconstruct_macro_utility(out.mus, out.lambdas, part.q_data().prices());
  return out;
}

}  // namespace phrev
