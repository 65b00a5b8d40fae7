#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phrev/model.hpp"

namespace phrev {

/// constant + Σ coeff · x[index]
struct AffineForm {
  double constant = 0.0;
  std::vector<std::pair<std::size_t, double>> terms;

  AffineForm& add(std::size_t index, double coeff) {
    terms.emplace_back(index, coeff);
    return *this;
  }
  double eval(const Vector& x) const;
  /// Dense coefficient vector of length `dim`; repeated indices accumulate.
  Vector gradient(std::size_t dim) const;
};

/// coeff · exp(exponent(x)), coeff > 0.
struct ExpTerm {
  double coeff = 1.0;
  AffineForm exponent;
};

/// log Σ_j C_j exp(a_j(x)).
struct LogSumExp {
  std::vector<ExpTerm> terms;
};

/// log(K + linear(x) − Σ_j D_j exp(a_j(x))). The linear part has no constant
/// and is how slack variables enter a residual.
struct LogResidual {
  double K = 1.0;
  AffineForm linear;
  std::vector<ExpTerm> terms;
};

/// lhs_affine + lhs_lse ≤ rhs_affine + rhs_logres.
///
/// A `tight` record must read log Σ_j D_j exp(x_j + c_j) ≤ log(K − Σ slacks)
/// with one distinct log variable per term. The solver treats such a record as
/// the definition of its slacks: a zero objective then means the equality
/// Σ_j D_j exp(x_j + c_j) = K holds.
struct ConstraintRecord {
  std::string label;
  AffineForm lhs_affine;
  std::optional<LogSumExp> lhs_lse;
  AffineForm rhs_affine;
  std::optional<LogResidual> rhs_logres;
  bool tight = false;
};

enum class VariableKind { kLog, kSlack };

struct Variable {
  std::string name;
  VariableKind kind = VariableKind::kLog;
};

inline constexpr double kDefaultBoxBound = 30.0;

/// Minimize Σ slacks subject to the constraint records. Log variables live in
/// [−B, B]; slacks in [0, slack_bound].
class LogConvexProgram {
 public:
  std::size_t add_variable(std::string name, VariableKind kind);
  /// Validates indices, term signs and the tight-record shape; throws
  /// kInvalidArgument otherwise.
  void add_constraint(ConstraintRecord record);

  std::size_t dimension() const { return variables_.size(); }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<ConstraintRecord>& constraints() const { return constraints_; }
  std::optional<std::size_t> find(const std::string& name) const;

  double box_bound() const { return box_bound_; }
  void set_box_bound(double bound);
  double slack_bound() const { return slack_bound_; }
  void set_slack_bound(double bound);

  /// Interior start. Defaults to 0 for log variables and 1 for slacks.
  Vector start() const;
  void set_start(std::size_t index, double value);

  /// Objective coefficient vector: 1 on slacks, 0 elsewhere.
  Vector objective() const;

 private:
  std::vector<Variable> variables_;
  std::vector<ConstraintRecord> constraints_;
  std::vector<double> start_;
  std::vector<bool> tight_owned_;
  double box_bound_ = kDefaultBoxBound;
  double slack_bound_ = 1e6;
};

/// g(x) = LHS(x) − RHS(x); +∞ when a residual argument is not positive.
double eval_constraint(const ConstraintRecord& c, const Vector& x);

/// ∇g(x). Throws kDomainViolation outside the residual domain.
Vector gradient(const ConstraintRecord& c, const Vector& x);

/// ∇²g(x), positive semidefinite on the domain. Throws kDomainViolation.
Matrix hessian(const ConstraintRecord& c, const Vector& x);

/// True when the record has no exponential terms and its net coefficients
/// vanish, so g is a constant.
bool is_constant(const ConstraintRecord& c);

struct SolveOptions {
  double eps = 1e-8;
  std::size_t max_iter = 200000;
  std::uint64_t seed = 0;
  /// Random restarts of the tight phase after the deterministic starts.
  std::size_t restarts = 24;
  /// Extra starting point for the tight phase, tried first.
  std::optional<Vector> warm_start;
};

struct SolveResult {
  Status status = Status::kUndecided;
  Vector point;
  double objective = 0.0;
  /// Certified lower bound on the optimum over the box; 0 when nothing better
  /// is known and +∞ when the constraints themselves are infeasible.
  double lower_bound = 0.0;
  std::size_t iterations = 0;
  double max_violation = 0.0;
  /// Objective after each outer iteration of the slack-minimization phase.
  std::vector<double> trace;
  std::string detail;
};

/// Phase I (barrier on the maximal violation), phase II (barrier on the slack
/// objective, giving a duality-gap lower bound) and, when tight records are
/// present, a Levenberg-Marquardt search for a point meeting them with zero
/// slack. INFEASIBLE is returned only from a certified lower bound.
SolveResult solve(const LogConvexProgram& program, const SolveOptions& options = {});

/// One line per constraint, terms in index order.
std::string to_text(const LogConvexProgram& program);

}  // namespace phrev
