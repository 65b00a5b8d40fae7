#pragma once

#include <optional>
#include <string>
#include <vector>

#include "phrev/convex.hpp"
#include "phrev/harp.hpp"
#include "phrev/model.hpp"

namespace phrev {

/// Partitioned data with the cross inner products cached. (p, q) is the
/// q-block, (x, y) the y-block.
class SeparabilityInstance {
 public:
  explicit SeparabilityInstance(PartitionedStatistics part);

  const PartitionedStatistics& part() const { return part_; }
  std::size_t periods() const { return part_.base().periods(); }

  /// x^tau · y^t
  double xy(std::size_t tau, std::size_t t) const { return xy_(tau, t); }
  /// p^tau · q^t
  double pq(std::size_t tau, std::size_t t) const { return pq_(tau, t); }
  /// p^t·q^t + x^t·y^t
  double expenditure(std::size_t t) const { return pq_(t, t) + xy_(t, t); }

 private:
  PartitionedStatistics part_;
  Matrix xy_;
  Matrix pq_;
};

/// u0(q, z) = min_t mu_t (p^t·q + z / lambda_t)
class MacroUtility {
 public:
  MacroUtility(Vector mus, Vector lambdas, Matrix q_prices);

  double operator()(const Vector& q, double z) const;
  const Vector& mus() const { return mus_; }
  const Vector& lambdas() const { return lambdas_; }
  const Matrix& q_prices() const { return q_prices_; }

 private:
  Vector mus_;
  Vector lambdas_;
  Matrix q_prices_;
};

struct SeparabilityTolerances {
  double accept = 1e-6;
  double reject = 1e-4;
};

/// decision.status: FEASIBLE means separable, INFEASIBLE not separable.
struct SeparabilityResult {
  Decision decision;
  Vector lambdas;  // normalized to sum 1
  Vector mus;      // normalized to max 1
  std::optional<PiecewiseLinearUtility> subutility;
  std::optional<MacroUtility> macro;
  /// Labels of constraints that fail at the reported point, or of the edges
  /// of a revealed-preference cycle that rules separability out.
  std::vector<std::string> violations;
  std::optional<ViolationCycle> cycle;
  double lower_bound = 0.0;
  std::size_t iterations = 0;
};

/// Variables lam[t], mu[t] (log scale) and slack gamma. Constraints:
///   i[t,s]:  lam_t + log x^t·y^t <= lam_s + log x^s·y^t
///   ii[t,s]: mu_t + lam_s + log E^t <= mu_s + log(A + B − Σ_i D_i e^{lam_i})
///            with A = p^s·q^t, B = x^t·y^t, D_i = A[i≠s] + B[i≠t]
///   norm:    log Σ_i e^{lam_i} <= log(1 − gamma), tight
/// Labels use 1-based periods.
LogConvexProgram build_separability_program(const SeparabilityInstance& inst);

/// Necessary HARP checks, then the program; every acceptance is re-verified
/// on the original inequalities.
SeparabilityResult check_separability(const PartitionedStatistics& part,
                                      const SeparabilityTolerances& tols = {},
                                      const SolveOptions& options = {});

/// λ_t x^t·y^t <= λ_s x^s·y^t (1+tol) and
/// μ_t λ_s E^t <= μ_s (λ_s p^s·q^t + λ_t x^t·y^t)(1+tol) for all t, s.
bool verify_separability_solution(const SeparabilityInstance& inst, const Vector& lambdas,
                                  const Vector& mus, double tol);

/// u1(y) = min_t λ_t x^t·y. Throws kInvalidMultipliers on non-positive or
/// mis-sized λ.
PiecewiseLinearUtility reconstruct_subutility(const Vector& lambdas, const Matrix& y_prices);

MacroUtility reconstruct_macro_utility(const Vector& mus, const Vector& lambdas,
                                       const Matrix& q_prices);

/// ν(w) = min { w·y : u(y) >= 1, y >= 0 }, solved through its packing dual.
double young_transform(const PiecewiseLinearUtility& u, const Vector& w);

}  // namespace phrev
