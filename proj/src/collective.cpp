#include "phrev/collective.hpp"

#include <cmath>
#include <string>

namespace phrev {

namespace {

struct Layout {
  std::size_t k, T, n;
  std::size_t lam(std::size_t a, std::size_t t) const { return a * T + t; }
  std::size_t q(std::size_t a, std::size_t t, std::size_t i) const {
    return k * T + (a * T + t) * n + i;
  }
  std::size_t gamma(std::size_t t, std::size_t i) const { return k * T + k * T * n + t * n + i; }
};

std::string idx(std::initializer_list<std::size_t> parts) {
  std::string s = "[";
  bool first = true;
  for (std::size_t p : parts) {
    if (!first) s += ",";
    s += std::to_string(p + 1);
    first = false;
  }
  return s + "]";
}

}  // namespace

LogConvexProgram build_collective_program(const MarketStatistics& stats, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one consumer");
  const std::size_t T = stats.periods();
  const std::size_t n = stats.goods();
  const Layout L{k, T, n};
  const Matrix& P = stats.prices();
  const Matrix& Q = stats.quantities();

  LogConvexProgram prog;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t t = 0; t < T; ++t) prog.add_variable("lam" + idx({a, t}), VariableKind::kLog);
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        prog.add_variable("q" + idx({a, t, i}), VariableKind::kLog);
      }
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < n; ++i) prog.add_variable("gamma" + idx({t, i}), VariableKind::kSlack);
  }

  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t s = 0; s < T; ++s) {
        ConstraintRecord c;
        c.label = "i" + idx({a, t, s});
        c.lhs_affine.add(L.lam(a, t), 1.0);
        LogSumExp lse;
        for (std::size_t i = 0; i < n; ++i) {
          ExpTerm e;
          e.coeff = P(t, i);
          e.exponent.add(L.q(a, t, i), 1.0);
          lse.terms.push_back(std::move(e));
        }
        c.lhs_lse = std::move(lse);
        c.rhs_affine.add(L.lam(a, s), 1.0);
        LogResidual r;
        r.K = stats.cost(s, t);
        for (std::size_t b = 0; b < k; ++b) {
          if (b == a) continue;
          for (std::size_t i = 0; i < n; ++i) {
            ExpTerm e;
            e.coeff = P(s, i);
            e.exponent.add(L.q(b, t, i), 1.0);
            r.terms.push_back(std::move(e));
          }
        }
        c.rhs_logres = std::move(r);
        prog.add_constraint(std::move(c));
      }
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      ConstraintRecord c;
      c.label = "ii" + idx({t, i});
      c.tight = true;
      LogSumExp lse;
      for (std::size_t a = 0; a < k; ++a) {
        ExpTerm e;
        e.exponent.add(L.q(a, t, i), 1.0);
        lse.terms.push_back(std::move(e));
      }
      c.lhs_lse = std::move(lse);
      LogResidual r;
      r.K = Q(t, i);
      r.linear.add(L.gamma(t, i), -1.0);
      c.rhs_logres = std::move(r);
      prog.add_constraint(std::move(c));
    }
  }

  const double kd = static_cast<double>(k);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t a = 0; a < k; ++a) {
      prog.set_start(L.lam(a, t), -std::log(2.0 * static_cast<double>(T)));
      for (std::size_t i = 0; i < n; ++i) prog.set_start(L.q(a, t, i), std::log(Q(t, i) / (2.0 * kd)));
    }
    for (std::size_t i = 0; i < n; ++i) prog.set_start(L.gamma(t, i), Q(t, i) / 4.0);
  }
  prog.set_slack_bound(std::max(1.0, 2.0 * Q.maxCoeff()));
  return prog;
}

MarketStatistics consumer_statistics(const MarketStatistics& stats,
                                     const AllocationSolution& alloc, std::size_t alpha) {
  return MarketStatistics(stats.prices(), alloc.sub_quantities.at(alpha));
}

bool verify_allocation(const MarketStatistics& stats, const AllocationSolution& alloc,
                       double tol) {
  const Eigen::Index T = static_cast<Eigen::Index>(stats.periods());
  const Eigen::Index n = static_cast<Eigen::Index>(stats.goods());
  if (alloc.k < 1 || alloc.sub_quantities.size() != alloc.k ||
      alloc.sub_lambdas.rows() != static_cast<Eigen::Index>(alloc.k) ||
      alloc.sub_lambdas.cols() != T || alloc.residuals.rows() != T ||
      alloc.residuals.cols() != n) {
    return false;
  }
  Matrix total = alloc.residuals;
  if (!(alloc.residuals.array() >= 0.0).all()) return false;
  for (const Matrix& q : alloc.sub_quantities) {
    if (q.rows() != T || q.cols() != n) return false;
    if (!(q.array() > 0.0).all() || !q.allFinite()) return false;
    total += q;
  }
  const Matrix& Q = stats.quantities();
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(total(t, i) - Q(t, i)) > tol * Q(t, i)) return false;
    }
  }
  for (std::size_t a = 0; a < alloc.k; ++a) {
    Vector lam = alloc.sub_lambdas.row(static_cast<Eigen::Index>(a)).transpose();
    if (!(lam.array() > 0.0).all() || !lam.allFinite()) return false;
    lam /= lam.sum();
    if (!verify_certificate(consumer_statistics(stats, alloc, a), AfriatCertificate{lam}, tol)) {
      return false;
    }
  }
  return true;
}

AllocationSolution split_in_half(const AllocationSolution& alloc) {
  if (alloc.k < 1) throw Error(ErrorCode::kInvalidArgument, "empty allocation");
  AllocationSolution out = alloc;
  out.k = alloc.k + 1;
  out.sub_quantities.back() *= 0.5;
  out.sub_quantities.push_back(out.sub_quantities.back());
  out.sub_lambdas.conservativeResize(static_cast<Eigen::Index>(out.k), Eigen::NoChange);
  out.sub_lambdas.row(static_cast<Eigen::Index>(alloc.k)) =
      alloc.sub_lambdas.row(static_cast<Eigen::Index>(alloc.k - 1));
  return out;
}

namespace {

Vector warm_vector(const LogConvexProgram& prog, const MarketStatistics& stats,
                   const AllocationSolution& alloc) {
  const Layout L{alloc.k, stats.periods(), stats.goods()};
  Vector z = prog.start();
  for (std::size_t a = 0; a < L.k; ++a) {
    for (std::size_t t = 0; t < L.T; ++t) {
      z[static_cast<Eigen::Index>(L.lam(a, t))] =
          std::log(alloc.sub_lambdas(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(t)));
      for (std::size_t i = 0; i < L.n; ++i) {
        z[static_cast<Eigen::Index>(L.q(a, t, i))] = std::log(
            alloc.sub_quantities[a](static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)));
      }
    }
  }
  return z;
}

}  // namespace

CollectiveResult check_collective(const MarketStatistics& stats, std::size_t k,
                                  const CollectiveTolerances& tols, const SolveOptions& options,
                                  const std::optional<AllocationSolution>& warm) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one consumer");
  if (!(tols.accept > 0.0) || !(tols.accept < tols.reject)) {
    throw Error(ErrorCode::kInvalidArgument, "need 0 < tol_accept < tol_reject");
  }
  const std::size_t T = stats.periods();
  const std::size_t n = stats.goods();
  CollectiveResult out;

  if (k == 1) {
    const HarpResult harp = check_harp(stats);
    out.decision = harp.decision;
    if (harp.decision.status == Status::kFeasible) {
      AllocationSolution alloc;
      alloc.k = 1;
      alloc.sub_quantities.push_back(stats.quantities());
      alloc.sub_lambdas = harp.certificate->lambdas.transpose();
      alloc.residuals = Matrix::Zero(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(n));
      out.decision.optimum = 0.0;
      out.allocation = std::move(alloc);
    }
    return out;
  }

  const LogConvexProgram prog = build_collective_program(stats, k);
  SolveOptions opts = options;
  if (warm) {
    if (warm->k != k) throw Error(ErrorCode::kShapeMismatch, "warm start has the wrong k");
    opts.warm_start = warm_vector(prog, stats, *warm);
  }
  const SolveResult sol = solve(prog, opts);
  out.iterations = sol.iterations;
  out.lower_bound = sol.lower_bound;
  if (std::isfinite(sol.objective)) out.decision.optimum = sol.objective;

  if (sol.status == Status::kInfeasible || sol.lower_bound >= tols.reject) {
    out.decision.status = Status::kInfeasible;
    out.decision.detail = "solver: " + sol.detail;
    return out;
  }
  if (sol.status != Status::kFeasible || sol.objective > tols.accept) {
    out.decision.status = Status::kUndecided;
    out.decision.detail = "solver: " + sol.detail;
    return out;
  }

  const Layout L{k, T, n};
  const Matrix& Q = stats.quantities();
  AllocationSolution alloc;
  alloc.k = k;
  alloc.sub_quantities.assign(k, Matrix(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(n)));
  alloc.sub_lambdas.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(T));
  alloc.residuals = Matrix::Zero(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(n));
  double worst_residual = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Index ti = static_cast<Eigen::Index>(t);
      const Eigen::Index ii = static_cast<Eigen::Index>(i);
      worst_residual = std::max(
          worst_residual, sol.point[static_cast<Eigen::Index>(L.gamma(t, i))] / Q(ti, ii));
      double sum = 0.0;
      for (std::size_t a = 0; a < k; ++a) {
        const double v = std::exp(sol.point[static_cast<Eigen::Index>(L.q(a, t, i))]);
        alloc.sub_quantities[a](ti, ii) = v;
        sum += v;
      }
      // Rescale so the balance holds exactly.
      for (std::size_t a = 0; a < k; ++a) alloc.sub_quantities[a](ti, ii) *= Q(ti, ii) / sum;
    }
  }
  if (worst_residual > tols.accept) {
    out.decision.status = Status::kUndecided;
    out.decision.detail = "feasible point leaves a residual above tolerance";
    return out;
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t t = 0; t < T; ++t) {
      alloc.sub_lambdas(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(t)) =
          std::exp(sol.point[static_cast<Eigen::Index>(L.lam(a, t))]);
    }
    const Eigen::Index A = static_cast<Eigen::Index>(a);
    alloc.sub_lambdas.row(A) /= alloc.sub_lambdas.row(A).sum();
  }

  if (!verify_allocation(stats, alloc, tols.accept)) {
    // Multipliers recomputed exactly for the rescaled split.
    bool repaired = true;
    for (std::size_t a = 0; a < k && repaired; ++a) {
      const HarpResult h = check_harp(consumer_statistics(stats, alloc, a));
      if (h.decision.status != Status::kFeasible) {
        repaired = false;
        break;
      }
      alloc.sub_lambdas.row(static_cast<Eigen::Index>(a)) = h.certificate->lambdas.transpose();
    }
    if (!repaired || !verify_allocation(stats, alloc, tols.accept)) {
      out.decision.status = Status::kUndecided;
      out.decision.detail = "solver split does not verify";
      return out;
    }
  }
  out.decision.status = Status::kFeasible;
  out.decision.detail = "verified split into " + std::to_string(k) + " consumers";
  out.allocation = std::move(alloc);
  return out;
}

ClassNumberResult class_number(const MarketStatistics& stats, std::size_t k_max,
                               const CollectiveTolerances& tols, const SolveOptions& options) {
  if (k_max == 0) k_max = stats.goods();
  ClassNumberResult out;
  bool undecided_seen = false;
  for (std::size_t k = 1; k <= k_max; ++k) {
    CollectiveResult r = check_collective(stats, k, tols, options);
    out.iterations += r.iterations;
    out.per_k[k] = r.decision;
    if (r.decision.status == Status::kFeasible) {
      out.value = k;
      out.witness = std::move(r.allocation);
      out.outcome = undecided_seen ? ClassNumberOutcome::kLowerBoundOnly : ClassNumberOutcome::kFound;
      if (!undecided_seen) out.lower_bound = k;
      return out;
    }
    if (r.decision.status == Status::kUndecided) {
      undecided_seen = true;
    } else if (!undecided_seen) {
      out.lower_bound = k + 1;
    }
  }
  out.outcome = ClassNumberOutcome::kNotFound;
  return out;
}

}  // namespace phrev
