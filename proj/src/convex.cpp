#include "phrev/convex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>

namespace phrev {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_log(const Variable& v) { return v.kind == VariableKind::kLog; }

}  // namespace

double AffineForm::eval(const Vector& x) const {
  double v = constant;
  for (const auto& [index, coeff] : terms) v += coeff * x[static_cast<Eigen::Index>(index)];
  return v;
}

Vector AffineForm::gradient(std::size_t dim) const {
  Vector g = Vector::Zero(static_cast<Eigen::Index>(dim));
  for (const auto& [index, coeff] : terms) g[static_cast<Eigen::Index>(index)] += coeff;
  return g;
}

// ---------------------------------------------------------------------------
// Program construction

std::size_t LogConvexProgram::add_variable(std::string name, VariableKind kind) {
  variables_.push_back(Variable{std::move(name), kind});
  start_.push_back(kind == VariableKind::kLog ? 0.0 : 1.0);
  tight_owned_.push_back(false);
  return variables_.size() - 1;
}

std::optional<std::size_t> LogConvexProgram::find(const std::string& name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].name == name) return i;
  }
  return std::nullopt;
}

void LogConvexProgram::set_box_bound(double bound) {
  if (!(bound > 0.0) || !std::isfinite(bound)) {
    throw Error(ErrorCode::kInvalidArgument, "box bound must be positive");
  }
  box_bound_ = bound;
}

void LogConvexProgram::set_slack_bound(double bound) {
  if (!(bound > 0.0) || !std::isfinite(bound)) {
    throw Error(ErrorCode::kInvalidArgument, "slack bound must be positive");
  }
  slack_bound_ = bound;
}

Vector LogConvexProgram::start() const {
  return Eigen::Map<const Vector>(start_.data(), static_cast<Eigen::Index>(start_.size()));
}

void LogConvexProgram::set_start(std::size_t index, double value) {
  if (index >= start_.size()) {
    throw Error(ErrorCode::kIndexOutOfRange, "no such variable");
  }
  start_[index] = value;
}

Vector LogConvexProgram::objective() const {
  Vector c = Vector::Zero(static_cast<Eigen::Index>(variables_.size()));
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (!is_log(variables_[i])) c[static_cast<Eigen::Index>(i)] = 1.0;
  }
  return c;
}

namespace {

void check_affine(const AffineForm& a, std::size_t dim, const std::string& label) {
  if (!std::isfinite(a.constant)) {
    throw Error(ErrorCode::kInvalidArgument, label + ": non-finite constant");
  }
  for (const auto& [index, coeff] : a.terms) {
    if (index >= dim) {
      throw Error(ErrorCode::kInvalidArgument, label + ": variable index out of range");
    }
    if (!std::isfinite(coeff)) {
      throw Error(ErrorCode::kInvalidArgument, label + ": non-finite coefficient");
    }
  }
}

void check_terms(const std::vector<ExpTerm>& terms, std::size_t dim,
                 const std::string& label) {
  for (const ExpTerm& term : terms) {
    if (!(term.coeff > 0.0) || !std::isfinite(term.coeff)) {
      throw Error(ErrorCode::kInvalidArgument,
                  label + ": exponential coefficients must be positive");
    }
    check_affine(term.exponent, dim, label);
  }
}

bool affine_is_zero(const AffineForm& a) {
  if (a.constant != 0.0) return false;
  return std::all_of(a.terms.begin(), a.terms.end(),
                     [](const auto& t) { return t.second == 0.0; });
}

}  // namespace

void LogConvexProgram::add_constraint(ConstraintRecord record) {
  const std::size_t dim = variables_.size();
  const std::string& label = record.label;
  check_affine(record.lhs_affine, dim, label);
  check_affine(record.rhs_affine, dim, label);
  if (record.lhs_lse) {
    if (record.lhs_lse->terms.empty()) {
      throw Error(ErrorCode::kInvalidArgument, label + ": empty log-sum-exp");
    }
    check_terms(record.lhs_lse->terms, dim, label);
  }
  if (record.rhs_logres) {
    const LogResidual& r = *record.rhs_logres;
    if (!(r.K > 0.0) || !std::isfinite(r.K)) {
      throw Error(ErrorCode::kInvalidArgument, label + ": residual constant must be positive");
    }
    if (r.linear.constant != 0.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  label + ": residual linear part carries no constant");
    }
    check_affine(r.linear, dim, label);
    check_terms(r.terms, dim, label);
  }

  if (record.tight) {
    if (!record.lhs_lse || !record.rhs_logres || !record.rhs_logres->terms.empty() ||
        !affine_is_zero(record.lhs_affine) || !affine_is_zero(record.rhs_affine)) {
      throw Error(ErrorCode::kInvalidArgument,
                  label + ": tight records have the form log(sum) <= log(K - slacks)");
    }
    for (const auto& [index, coeff] : record.rhs_logres->linear.terms) {
      if (is_log(variables_[index]) || coeff >= 0.0) {
        throw Error(ErrorCode::kInvalidArgument,
                    label + ": tight residuals may only subtract slacks");
      }
    }
    std::vector<std::size_t> owned;
    for (const ExpTerm& term : record.lhs_lse->terms) {
      const auto& t = term.exponent.terms;
      if (t.size() != 1 || t.front().second != 1.0 || !is_log(variables_[t.front().first])) {
        throw Error(ErrorCode::kInvalidArgument,
                    label + ": tight terms must be exp(x_j + c_j) of one log variable");
      }
      const std::size_t v = t.front().first;
      if (tight_owned_[v] || std::find(owned.begin(), owned.end(), v) != owned.end()) {
        throw Error(ErrorCode::kInvalidArgument,
                    label + ": log variable shared between tight terms");
      }
      owned.push_back(v);
    }
    for (std::size_t v : owned) tight_owned_[v] = true;
  }
  constraints_.push_back(std::move(record));
}

// ---------------------------------------------------------------------------
// Evaluation on a compressed local index set

namespace {

struct LocalAffine {
  double constant = 0.0;
  Vector coef;
};

struct LocalExp {
  double log_coeff = 0.0;
  LocalAffine exponent;
};

// A constraint restricted to the variables it touches.
struct Compiled {
  std::vector<std::size_t> idx;
  LocalAffine affine;  // lhs_affine − rhs_affine
  std::vector<LocalExp> lse;
  bool has_residual = false;
  double K = 0.0;
  Vector linear;
  std::vector<LocalExp> residual;
  bool tight = false;
  bool constant = false;
};

struct LocalEval {
  double value = 0.0;
  Vector grad;
  Matrix hess;
};

Compiled compile(const ConstraintRecord& c) {
  std::map<std::size_t, Eigen::Index> local;
  auto collect = [&](const AffineForm& a) {
    for (const auto& term : a.terms) local.emplace(term.first, 0);
  };
  collect(c.lhs_affine);
  collect(c.rhs_affine);
  if (c.lhs_lse) for (const auto& t : c.lhs_lse->terms) collect(t.exponent);
  if (c.rhs_logres) {
    collect(c.rhs_logres->linear);
    for (const auto& t : c.rhs_logres->terms) collect(t.exponent);
  }
  Compiled out;
  Eigen::Index next = 0;
  for (auto& [global, slot] : local) {
    slot = next++;
    out.idx.push_back(global);
  }
  const Eigen::Index L = next;
  auto lower = [&](const AffineForm& a, double sign, LocalAffine& into) {
    if (into.coef.size() != L) into.coef = Vector::Zero(L);
    into.constant += sign * a.constant;
    for (const auto& [global, coeff] : a.terms) into.coef[local.at(global)] += sign * coeff;
  };
  lower(c.lhs_affine, 1.0, out.affine);
  lower(c.rhs_affine, -1.0, out.affine);
  if (out.affine.coef.size() != L) out.affine.coef = Vector::Zero(L);
  if (c.lhs_lse) {
    for (const auto& t : c.lhs_lse->terms) {
      LocalExp e;
      e.log_coeff = std::log(t.coeff);
      lower(t.exponent, 1.0, e.exponent);
      out.lse.push_back(std::move(e));
    }
  }
  if (c.rhs_logres) {
    out.has_residual = true;
    out.K = c.rhs_logres->K;
    LocalAffine lin;
    lower(c.rhs_logres->linear, 1.0, lin);
    out.linear = std::move(lin.coef);
    for (const auto& t : c.rhs_logres->terms) {
      LocalExp e;
      e.log_coeff = std::log(t.coeff);
      lower(t.exponent, 1.0, e.exponent);
      out.residual.push_back(std::move(e));
    }
  }
  out.tight = c.tight;
  out.constant = out.lse.empty() && !out.has_residual &&
                 (out.affine.coef.array() == 0.0).all();
  return out;
}

Vector gather(const Compiled& c, const Vector& x) {
  Vector xl(static_cast<Eigen::Index>(c.idx.size()));
  for (std::size_t j = 0; j < c.idx.size(); ++j) {
    xl[static_cast<Eigen::Index>(j)] = x[static_cast<Eigen::Index>(c.idx[j])];
  }
  return xl;
}

double exponent_value(const LocalExp& e, const Vector& xl) {
  return e.log_coeff + e.exponent.constant + e.exponent.coef.dot(xl);
}

double residual_argument(const Compiled& c, const Vector& xl) {
  double h = c.K + c.linear.dot(xl);
  for (const LocalExp& e : c.residual) h -= std::exp(exponent_value(e, xl));
  return h;
}

double value(const Compiled& c, const Vector& xl) {
  double g = c.affine.constant + c.affine.coef.dot(xl);
  if (!c.lse.empty()) {
    double top = -kInf;
    std::vector<double> a(c.lse.size());
    for (std::size_t j = 0; j < c.lse.size(); ++j) {
      a[j] = exponent_value(c.lse[j], xl);
      top = std::max(top, a[j]);
    }
    double sum = 0.0;
    for (double aj : a) sum += std::exp(aj - top);
    g += top + std::log(sum);
  }
  if (c.has_residual) {
    const double h = residual_argument(c, xl);
    if (!(h > 0.0)) return kInf;
    g -= std::log(h);
  }
  return std::isnan(g) ? kInf : g;
}

// Value, gradient and (optionally) Hessian in local coordinates. Returns false
// outside the residual domain.
bool evaluate(const Compiled& c, const Vector& xl, LocalEval& out, bool want_hess) {
  const Eigen::Index L = xl.size();
  out.value = c.affine.constant + c.affine.coef.dot(xl);
  out.grad = c.affine.coef;
  if (want_hess) out.hess = Matrix::Zero(L, L);

  if (!c.lse.empty()) {
    double top = -kInf;
    std::vector<double> a(c.lse.size());
    for (std::size_t j = 0; j < c.lse.size(); ++j) {
      a[j] = exponent_value(c.lse[j], xl);
      top = std::max(top, a[j]);
    }
    double sum = 0.0;
    for (double& aj : a) {
      aj = std::exp(aj - top);
      sum += aj;
    }
    out.value += top + std::log(sum);
    Vector mean = Vector::Zero(L);
    for (std::size_t j = 0; j < c.lse.size(); ++j) {
      const double w = a[j] / sum;
      mean += w * c.lse[j].exponent.coef;
      if (want_hess) {
        out.hess.noalias() += w * c.lse[j].exponent.coef * c.lse[j].exponent.coef.transpose();
      }
    }
    out.grad += mean;
    if (want_hess) out.hess.noalias() -= mean * mean.transpose();
  }

  if (c.has_residual) {
    double h = c.K + c.linear.dot(xl);
    Vector dh = c.linear;
    Matrix d2h;
    if (want_hess) d2h = Matrix::Zero(L, L);
    for (const LocalExp& e : c.residual) {
      const double term = std::exp(exponent_value(e, xl));
      h -= term;
      dh -= term * e.exponent.coef;
      if (want_hess) d2h.noalias() -= term * e.exponent.coef * e.exponent.coef.transpose();
    }
    if (!(h > 0.0) || !std::isfinite(h)) return false;
    out.value -= std::log(h);
    out.grad -= dh / h;
    if (want_hess) {
      out.hess.noalias() -= d2h / h;
      out.hess.noalias() += (dh * dh.transpose()) / (h * h);
    }
  }
  return std::isfinite(out.value);
}

}  // namespace

double eval_constraint(const ConstraintRecord& c, const Vector& x) {
  const Compiled cc = compile(c);
  return value(cc, gather(cc, x));
}

Vector gradient(const ConstraintRecord& c, const Vector& x) {
  const Compiled cc = compile(c);
  LocalEval e;
  if (!evaluate(cc, gather(cc, x), e, false)) {
    throw Error(ErrorCode::kDomainViolation, c.label + ": residual argument not positive");
  }
  Vector g = Vector::Zero(x.size());
  for (std::size_t j = 0; j < cc.idx.size(); ++j) {
    g[static_cast<Eigen::Index>(cc.idx[j])] = e.grad[static_cast<Eigen::Index>(j)];
  }
  return g;
}

Matrix hessian(const ConstraintRecord& c, const Vector& x) {
  const Compiled cc = compile(c);
  LocalEval e;
  if (!evaluate(cc, gather(cc, x), e, true)) {
    throw Error(ErrorCode::kDomainViolation, c.label + ": residual argument not positive");
  }
  Matrix h = Matrix::Zero(x.size(), x.size());
  for (std::size_t a = 0; a < cc.idx.size(); ++a) {
    for (std::size_t b = 0; b < cc.idx.size(); ++b) {
      h(static_cast<Eigen::Index>(cc.idx[a]), static_cast<Eigen::Index>(cc.idx[b])) =
          e.hess(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
  }
  return h;
}

bool is_constant(const ConstraintRecord& c) { return compile(c).constant; }

// ---------------------------------------------------------------------------
// Solver

namespace {

// Log barrier over the program constraints plus box and slack bounds. In
// phase one an extra variable s (last coordinate) relaxes every program
// constraint and slack sign condition; the objective is then s itself.
class Barrier {
 public:
  Barrier(const LogConvexProgram& program, const std::vector<Compiled>& cons,
          bool phase_one)
      : program_(program), cons_(cons), phase_one_(phase_one) {
    n_ = program.dimension();
    dim_ = n_ + (phase_one ? 1 : 0);
    c_ = Vector::Zero(static_cast<Eigen::Index>(dim_));
    if (phase_one) {
      c_[static_cast<Eigen::Index>(n_)] = 1.0;
    } else {
      c_ = program.objective();
    }
    terms_ = 2 * n_ + (phase_one ? 1 : 0);
    for (const Compiled& c : cons_) {
      if (!c.constant) ++terms_;
    }
  }

  std::size_t dim() const { return dim_; }
  double terms() const { return static_cast<double>(terms_); }
  double objective(const Vector& z) const { return c_.dot(z); }

  // Barrier value t·cᵀz − Σ log(−f_i); +∞ unless strictly feasible.
  double phi(const Vector& z, double t) const {
    double total = t * objective(z);
    const double s = shift(z);
    const Vector x = z.head(static_cast<Eigen::Index>(n_));
    for (const Compiled& c : cons_) {
      if (c.constant) continue;
      const double f = value(c, gather(c, x)) - s;
      if (!(f < 0.0)) return kInf;
      total -= std::log(-f);
    }
    for (std::size_t j = 0; j < n_; ++j) {
      double lo = 0.0;
      double hi = 0.0;
      bounds(j, z, lo, hi);
      if (!(lo > 0.0) || !(hi > 0.0)) return kInf;
      total -= std::log(lo) + std::log(hi);
    }
    if (phase_one_) {
      const double room = 1.0 + s;
      if (!(room > 0.0)) return kInf;
      total -= std::log(room);
    }
    return std::isfinite(total) ? total : kInf;
  }

  void derivatives(const Vector& z, double t, Vector& grad, Matrix& hess) const {
    const Eigen::Index D = static_cast<Eigen::Index>(dim_);
    grad = t * c_;
    hess = Matrix::Zero(D, D);
    const double s = shift(z);
    const Vector x = z.head(static_cast<Eigen::Index>(n_));
    const Eigen::Index S = static_cast<Eigen::Index>(n_);
    LocalEval e;
    for (const Compiled& c : cons_) {
      if (c.constant) continue;
      evaluate(c, gather(c, x), e, true);
      const double f = e.value - s;
      const double inv = -1.0 / f;  // positive
      const std::size_t L = c.idx.size();
      // Full local gradient of f includes −1 on s in phase one.
      for (std::size_t a = 0; a < L; ++a) {
        const Eigen::Index ga = static_cast<Eigen::Index>(c.idx[a]);
        grad[ga] += inv * e.grad[static_cast<Eigen::Index>(a)];
        for (std::size_t b = 0; b < L; ++b) {
          const Eigen::Index gb = static_cast<Eigen::Index>(c.idx[b]);
          hess(ga, gb) += inv * e.hess(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +
                          inv * inv * e.grad[static_cast<Eigen::Index>(a)] *
                              e.grad[static_cast<Eigen::Index>(b)];
        }
      }
      if (phase_one_) {
        grad[S] -= inv;
        hess(S, S) += inv * inv;
        for (std::size_t a = 0; a < L; ++a) {
          const Eigen::Index ga = static_cast<Eigen::Index>(c.idx[a]);
          const double cross = -inv * inv * e.grad[static_cast<Eigen::Index>(a)];
          hess(ga, S) += cross;
          hess(S, ga) += cross;
        }
      }
    }
    for (std::size_t j = 0; j < n_; ++j) {
      const Eigen::Index J = static_cast<Eigen::Index>(j);
      double lo = 0.0;
      double hi = 0.0;
      bounds(j, z, lo, hi);
      // lo = x_j − lower (+ s for relaxed slack signs), hi = upper − x_j.
      grad[J] += -1.0 / lo + 1.0 / hi;
      hess(J, J) += 1.0 / (lo * lo) + 1.0 / (hi * hi);
      if (phase_one_ && relaxed_lower(j)) {
        grad[S] += -1.0 / lo;
        hess(S, S) += 1.0 / (lo * lo);
        hess(J, S) += 1.0 / (lo * lo);
        hess(S, J) += 1.0 / (lo * lo);
      }
    }
    if (phase_one_) {
      const double room = 1.0 + s;
      grad[S] -= 1.0 / room;
      hess(S, S) += 1.0 / (room * room);
    }
  }

 private:
  double shift(const Vector& z) const {
    return phase_one_ ? z[static_cast<Eigen::Index>(n_)] : 0.0;
  }
  bool relaxed_lower(std::size_t j) const {
    return !is_log(program_.variables()[j]);
  }
  // Distances to the lower and upper bound of variable j.
  void bounds(std::size_t j, const Vector& z, double& lo, double& hi) const {
    const double v = z[static_cast<Eigen::Index>(j)];
    if (is_log(program_.variables()[j])) {
      lo = v + program_.box_bound();
      hi = program_.box_bound() - v;
    } else {
      lo = v + shift(z);
      hi = program_.slack_bound() - v;
    }
  }

  const LogConvexProgram& program_;
  const std::vector<Compiled>& cons_;
  bool phase_one_;
  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  std::size_t terms_ = 0;
  Vector c_;
};

struct Budget {
  std::size_t used = 0;
  std::size_t limit = 0;
  bool exhausted() const { return used >= limit; }
};

// Newton centering with backtracking. `stop` is checked after each accepted
// step and ends centering early when it returns true.
template <class Stop>
void center(const Barrier& barrier, Vector& z, double t, Budget& budget, Stop stop) {
  Vector grad;
  Matrix hess;
  double current = barrier.phi(z, t);
  for (int inner = 0; inner < 60 && !budget.exhausted(); ++inner) {
    barrier.derivatives(z, t, grad, hess);
    Eigen::LDLT<Matrix> ldlt(hess);
    Vector step = ldlt.solve(-grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      const double ridge = 1e-10 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
      step = (hess + ridge * Matrix::Identity(hess.rows(), hess.cols())).ldlt().solve(-grad);
      if (!step.allFinite()) return;
    }
    const double decrement = -grad.dot(step);
    if (decrement < 0.0) return;  // not a descent direction; Hessian broke down
    if (decrement / 2.0 <= 1e-11) return;
    double alpha = 1.0;
    bool accepted = false;
    while (alpha > 1e-14) {
      const Vector trial = z + alpha * step;
      const double next = barrier.phi(trial, t);
      if (next <= current - 0.25 * alpha * decrement) {
        z = trial;
        current = next;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    ++budget.used;
    if (!accepted) return;
    if (stop(z)) return;
  }
}

struct TightGroup {
  double log_k = 0.0;
  std::vector<std::size_t> vars;
  std::vector<double> offsets;  // log D_j + c_j
};

// Levenberg-Marquardt on hinge residuals of the non-tight constraints, with
// each tight group projected onto its equality by a common log shift.
class TightSearch {
 public:
  TightSearch(const LogConvexProgram& program, const std::vector<Compiled>& cons)
      : program_(program), cons_(cons), n_(program.dimension()) {
    for (std::size_t i = 0; i < cons.size(); ++i) {
      const ConstraintRecord& r = program.constraints()[i];
      if (r.tight) {
        TightGroup g;
        g.log_k = std::log(r.rhs_logres->K);
        for (const ExpTerm& term : r.lhs_lse->terms) {
          g.vars.push_back(term.exponent.terms.front().first);
          g.offsets.push_back(std::log(term.coeff) + term.exponent.constant);
        }
        groups_.push_back(std::move(g));
      } else if (!cons[i].constant) {
        active_.push_back(i);
      }
    }
  }

  // Slacks at zero, tight groups shifted onto their equalities.
  Vector project(const Vector& z, std::vector<Vector>* weights) const {
    Vector x = z;
    if (weights) weights->clear();
    for (std::size_t j = 0; j < n_; ++j) {
      if (!is_log(program_.variables()[j])) x[static_cast<Eigen::Index>(j)] = 0.0;
    }
    for (const TightGroup& g : groups_) {
      const std::size_t m = g.vars.size();
      Vector a(static_cast<Eigen::Index>(m));
      for (std::size_t j = 0; j < m; ++j) {
        a[static_cast<Eigen::Index>(j)] = z[static_cast<Eigen::Index>(g.vars[j])] + g.offsets[j];
      }
      const double top = a.maxCoeff();
      const Vector w = (a.array() - top).exp().matrix();
      const double lse = top + std::log(w.sum());
      const double delta = g.log_k - lse;
      for (std::size_t j = 0; j < m; ++j) {
        x[static_cast<Eigen::Index>(g.vars[j])] += delta;
      }
      if (weights) weights->push_back(w / w.sum());
    }
    return x;
  }

  // Hinge residuals; false if any is non-finite.
  bool residuals(const Vector& x, Vector& r) const {
    r.resize(static_cast<Eigen::Index>(active_.size() + n_));
    for (std::size_t k = 0; k < active_.size(); ++k) {
      const Compiled& c = cons_[active_[k]];
      const double g = value(c, gather(c, x));
      if (!std::isfinite(g)) return false;
      r[static_cast<Eigen::Index>(k)] = std::max(0.0, g);
    }
    const double B = program_.box_bound();
    for (std::size_t j = 0; j < n_; ++j) {
      const double v = x[static_cast<Eigen::Index>(j)];
      double over = 0.0;
      if (is_log(program_.variables()[j])) over = std::max(0.0, std::abs(v) - B);
      r[static_cast<Eigen::Index>(active_.size() + j)] = over;
    }
    return true;
  }

  Matrix jacobian(const Vector& x, const Vector& r, const std::vector<Vector>& weights) const {
    const Eigen::Index N = static_cast<Eigen::Index>(n_);
    Matrix J = Matrix::Zero(r.size(), N);
    LocalEval e;
    for (std::size_t k = 0; k < active_.size(); ++k) {
      if (r[static_cast<Eigen::Index>(k)] <= 0.0) continue;
      const Compiled& c = cons_[active_[k]];
      evaluate(c, gather(c, x), e, false);
      for (std::size_t a = 0; a < c.idx.size(); ++a) {
        J(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c.idx[a])) =
            e.grad[static_cast<Eigen::Index>(a)];
      }
    }
    for (std::size_t j = 0; j < n_; ++j) {
      const Eigen::Index row = static_cast<Eigen::Index>(active_.size() + j);
      if (r[row] > 0.0) {
        J(row, static_cast<Eigen::Index>(j)) = x[static_cast<Eigen::Index>(j)] > 0 ? 1.0 : -1.0;
      }
    }
    // Chain rule through the projection: x_g = z_g + δ(z_g), ∂δ/∂z_g = −w.
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      const TightGroup& g = groups_[gi];
      Vector rowsum = Vector::Zero(J.rows());
      for (std::size_t v : g.vars) rowsum += J.col(static_cast<Eigen::Index>(v));
      for (std::size_t j = 0; j < g.vars.size(); ++j) {
        J.col(static_cast<Eigen::Index>(g.vars[j])) -=
            weights[gi][static_cast<Eigen::Index>(j)] * rowsum;
      }
    }
    // Slack columns are frozen.
    for (std::size_t j = 0; j < n_; ++j) {
      if (!is_log(program_.variables()[j])) J.col(static_cast<Eigen::Index>(j)).setZero();
    }
    return J;
  }

  // Runs one start. On success returns the projected point.
  std::optional<Vector> run(Vector z, double target, std::size_t max_steps,
                            Budget& budget) const {
    std::vector<Vector> weights;
    Vector x = project(z, &weights);
    Vector r;
    if (!residuals(x, r)) return std::nullopt;
    double cost = 0.5 * r.squaredNorm();
    double mu = -1.0;
    double nu = 2.0;
    for (std::size_t step = 0; step < max_steps && !budget.exhausted(); ++step) {
      if (r.size() == 0 || r.maxCoeff() <= target) return x;
      const Matrix J = jacobian(x, r, weights);
      const Matrix A = J.transpose() * J;
      const Vector g = J.transpose() * r;
      if (g.cwiseAbs().maxCoeff() < 1e-300) return std::nullopt;
      if (mu < 0.0) mu = 1e-3 * std::max(A.diagonal().maxCoeff(), 1e-12);
      ++budget.used;
      const Matrix M = A + mu * Matrix::Identity(A.rows(), A.cols());
      const Vector dz = M.ldlt().solve(-g);
      if (!dz.allFinite()) return std::nullopt;
      const Vector z_next = z + dz;
      std::vector<Vector> w_next;
      const Vector x_next = project(z_next, &w_next);
      Vector r_next;
      const bool finite = x_next.allFinite() && residuals(x_next, r_next);
      const double cost_next = finite ? 0.5 * r_next.squaredNorm() : kInf;
      const double predicted = -(g.dot(dz) + 0.5 * dz.dot(A * dz));
      const double rho = predicted > 0.0 ? (cost - cost_next) / predicted : -1.0;
      if (finite && cost_next < cost) {
        z = z_next;
        x = x_next;
        r = r_next;
        weights = std::move(w_next);
        cost = cost_next;
        const double f = 2.0 * rho - 1.0;
        mu *= std::max(1.0 / 3.0, 1.0 - f * f * f);
        nu = 2.0;
      } else {
        mu *= nu;
        nu *= 2.0;
        if (mu > 1e30) return std::nullopt;
      }
    }
    if (r.size() == 0 || r.maxCoeff() <= target) return x;
    return std::nullopt;
  }

  bool empty() const { return groups_.empty(); }

 private:
  const LogConvexProgram& program_;
  const std::vector<Compiled>& cons_;
  std::size_t n_;
  std::vector<TightGroup> groups_;
  std::vector<std::size_t> active_;
};

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double max_violation(const LogConvexProgram& program, const std::vector<Compiled>& cons,
                     const Vector& x) {
  double worst = 0.0;
  for (const Compiled& c : cons) worst = std::max(worst, value(c, gather(c, x)));
  for (std::size_t j = 0; j < program.dimension(); ++j) {
    const double v = x[static_cast<Eigen::Index>(j)];
    if (is_log(program.variables()[j])) {
      worst = std::max(worst, std::abs(v) - program.box_bound());
    } else {
      worst = std::max({worst, -v, v - program.slack_bound()});
    }
  }
  return worst;
}

bool near_box(const LogConvexProgram& program, const Vector& x) {
  const double edge = program.box_bound() * (1.0 - 1e-6);
  for (std::size_t j = 0; j < program.dimension(); ++j) {
    if (is_log(program.variables()[j]) && std::abs(x[static_cast<Eigen::Index>(j)]) >= edge) {
      return true;
    }
  }
  return false;
}

}  // namespace

SolveResult solve(const LogConvexProgram& program, const SolveOptions& options) {
  if (!(options.eps > 0.0) || options.eps > 1e-3) {
    throw Error(ErrorCode::kInvalidArgument, "eps must lie in (0, 1e-3]");
  }
  const double eps = options.eps;
  const std::size_t n = program.dimension();
  std::vector<Compiled> cons;
  cons.reserve(program.constraints().size());
  for (const ConstraintRecord& r : program.constraints()) cons.push_back(compile(r));

  SolveResult result;
  Budget budget{0, options.max_iter};
  const Vector cost = program.objective();
  auto finish = [&](Status status, Vector point, std::string detail) {
    result.status = status;
    result.point = std::move(point);
    result.objective = status == Status::kInfeasible && !std::isfinite(result.lower_bound)
                           ? kInf
                           : cost.dot(result.point);
    result.max_violation = max_violation(program, cons, result.point);
    result.iterations = budget.used;
    result.detail = std::move(detail);
    return result;
  };

  // Start point, pulled strictly inside the box.
  Vector x = program.start();
  const double B = program.box_bound();
  for (std::size_t j = 0; j < n; ++j) {
    const Eigen::Index J = static_cast<Eigen::Index>(j);
    if (is_log(program.variables()[j])) {
      x[J] = std::clamp(x[J], -0.99 * B, 0.99 * B);
    } else {
      x[J] = std::clamp(x[J], 0.0, 0.99 * program.slack_bound());
    }
  }

  for (std::size_t i = 0; i < cons.size(); ++i) {
    if (cons[i].constant && cons[i].affine.constant > 0.0) {
      result.lower_bound = kInf;
      return finish(Status::kInfeasible, x,
                    program.constraints()[i].label + " is a violated constant");
    }
  }

  if (std::all_of(cons.begin(), cons.end(), [](const Compiled& c) { return c.constant; })) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!is_log(program.variables()[j])) x[static_cast<Eigen::Index>(j)] = 0.0;
    }
    return finish(Status::kFeasible, x, "no non-constant constraints");
  }

  TightSearch tight(program, cons);

  // A warm start that already solves the program, or polishes into a solution,
  // skips both barrier phases.
  if (options.warm_start) {
    if (static_cast<std::size_t>(options.warm_start->size()) != n) {
      throw Error(ErrorCode::kShapeMismatch, "warm start has the wrong dimension");
    }
    const Vector& w = *options.warm_start;
    const auto accept = [&](const Vector& z) {
      return cost.dot(z) <= eps && max_violation(program, cons, z) <= eps && !near_box(program, z);
    };
    if (accept(w)) return finish(Status::kFeasible, w, "warm start meets every constraint");
    if (!tight.empty()) {
      const auto found = tight.run(w, eps, 400, budget);
      if (found && accept(*found)) {
        return finish(Status::kFeasible, *found, "tight constraints met with zero slack");
      }
    }
  }

  // Phase I.
  double worst = -kInf;
  for (const Compiled& c : cons) {
    if (!c.constant) worst = std::max(worst, value(c, gather(c, x)));
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!is_log(program.variables()[j])) worst = std::max(worst, -x[static_cast<Eigen::Index>(j)]);
  }
  if (!std::isfinite(worst) && worst > 0.0) {
    return finish(Status::kUndecided, x, "start point outside the residual domain");
  }

  bool interior = worst < 0.0;
  if (!interior) {
    const Barrier barrier(program, cons, true);
    Vector z(static_cast<Eigen::Index>(n + 1));
    z.head(static_cast<Eigen::Index>(n)) = x;
    z[static_cast<Eigen::Index>(n)] = std::max(worst + 1.0, -0.5);
    const auto s_of = [n](const Vector& v) { return v[static_cast<Eigen::Index>(n)]; };
    double t = 1.0;
    while (!budget.exhausted()) {
      center(barrier, z, t, budget, [&](const Vector& v) { return s_of(v) < 0.0; });
      if (s_of(z) < 0.0) {
        interior = true;
        break;
      }
      const double bound = s_of(z) - barrier.terms() / t;
      if (bound > 0.0) {
        result.lower_bound = kInf;
        return finish(Status::kInfeasible, z.head(static_cast<Eigen::Index>(n)),
                      "constraints certified infeasible (violation bound " +
                          std::to_string(bound) + ")");
      }
      if (barrier.terms() / t < 0.1 * eps) break;
      t *= 20.0;
    }
    x = z.head(static_cast<Eigen::Index>(n));
  }

  // Phase II: barrier on the slack objective.
  Vector relaxed = x;
  double lower = 0.0;
  if (interior) {
    const Barrier barrier(program, cons, false);
    double t = 1.0;
    while (!budget.exhausted()) {
      center(barrier, relaxed, t, budget, [](const Vector&) { return false; });
      const double f = barrier.objective(relaxed);
      result.trace.push_back(f);
      lower = std::max(lower, f - barrier.terms() / t);
      // Once infeasibility is certified, keep going until the gap is small
      // relative to the optimum so the reported objective is accurate.
      if (lower > 10.0 * eps && barrier.terms() / t <= 1e-7 * lower) break;
      if (f <= eps) break;
      if (barrier.terms() / t < 0.1 * eps) break;
      t *= 20.0;
    }
  }
  result.lower_bound = lower;

  if (lower > 10.0 * eps) {
    return finish(Status::kInfeasible, relaxed, "objective lower bound exceeds tolerance");
  }

  if (tight.empty()) {
    if (budget.exhausted()) return finish(Status::kUndecided, relaxed, "iteration budget exhausted");
    const double f = cost.dot(relaxed);
    const double viol = max_violation(program, cons, relaxed);
    if (f <= eps && viol <= eps) {
      if (near_box(program, relaxed)) {
        return finish(Status::kUndecided, relaxed, "solution on the box boundary");
      }
      return finish(Status::kFeasible, relaxed, "objective within tolerance");
    }
    return finish(Status::kUndecided, relaxed, "objective inside the ambiguity band");
  }

  // Tight phase: look for a zero-slack point meeting the tight equalities.
  std::vector<Vector> starts;
  starts.push_back(relaxed);
  starts.push_back(x);
  starts.push_back(program.start());
  std::mt19937_64 rng(options.seed);
  const Vector base = program.start();
  bool hit_box = false;
  for (std::size_t attempt = 0; attempt < starts.size() + options.restarts; ++attempt) {
    if (budget.exhausted()) break;
    Vector z;
    if (attempt < starts.size()) {
      z = starts[attempt];
    } else {
      z = base;
      for (std::size_t j = 0; j < n; ++j) {
        z[static_cast<Eigen::Index>(j)] += 4.0 * uniform01(rng) - 2.0;
      }
    }
    const auto found = tight.run(z, eps, 400, budget);
    if (!found) continue;
    if (near_box(program, *found)) {
      hit_box = true;
      continue;
    }
    if (max_violation(program, cons, *found) <= eps) {
      return finish(Status::kFeasible, *found, "tight constraints met with zero slack");
    }
  }
  if (budget.exhausted()) return finish(Status::kUndecided, relaxed, "iteration budget exhausted");
  return finish(Status::kUndecided, relaxed,
                hit_box ? "only solutions on the box boundary were found"
                        : "no zero-slack point found from any start");
}

// ---------------------------------------------------------------------------
// Text dump

namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string affine_text(const AffineForm& a, const LogConvexProgram& p) {
  std::map<std::size_t, double> merged;
  for (const auto& [index, coeff] : a.terms) merged[index] += coeff;
  std::string out = number(a.constant);
  for (const auto& [index, coeff] : merged) {
    if (coeff == 0.0) continue;
    out += " + " + number(coeff) + "*" + p.variables()[index].name;
  }
  return out;
}

std::string exp_text(const std::vector<ExpTerm>& terms, const LogConvexProgram& p) {
  std::string out;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    if (j) out += " + ";
    out += number(terms[j].coeff) + "*exp(" + affine_text(terms[j].exponent, p) + ")";
  }
  return out;
}

}  // namespace

std::string to_text(const LogConvexProgram& program) {
  std::ostringstream out;
  out << "box " << number(program.box_bound()) << "\n";
  for (const Variable& v : program.variables()) {
    out << (is_log(v) ? "log " : "slack ") << v.name << "\n";
  }
  for (const ConstraintRecord& c : program.constraints()) {
    out << (c.tight ? "tight " : "con ") << c.label << ": " << affine_text(c.lhs_affine, program);
    if (c.lhs_lse) out << " + log(" << exp_text(c.lhs_lse->terms, program) << ")";
    out << " <= " << affine_text(c.rhs_affine, program);
    if (c.rhs_logres) {
      out << " + log(" << number(c.rhs_logres->K) << " + ("
          << affine_text(c.rhs_logres->linear, program) << ") - ("
          << exp_text(c.rhs_logres->terms, program) << "))";
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace phrev
