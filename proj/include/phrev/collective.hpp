#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "phrev/convex.hpp"
#include "phrev/harp.hpp"
#include "phrev/model.hpp"

namespace phrev {

/// Split of observed demand among k consumers.
struct AllocationSolution {
  std::size_t k = 0;
  std::vector<Matrix> sub_quantities;  // k matrices, each T×n
  Matrix sub_lambdas;                  // k×T, rows normalized to sum 1
  Matrix residuals;                    // T×n, Q − Σ_α q^α
};

struct CollectiveTolerances {
  double accept = 1e-6;
  double reject = 1e-4;
};

/// Variables lam[a,t], q[a,t,i] (log scale) and slacks gamma[t,i].
///   i[a,t,s]: lam_{a,t} + log Σ_i P^t_i e^{q_{a,t,i}}
///               <= lam_{a,s} + log Σ_i P^s_i (Q^t_i − Σ_{b≠a} e^{q_{b,t,i}})
///   ii[t,i]:  log Σ_a e^{q_{a,t,i}} <= log(Q^t_i − gamma_{t,i}), tight
LogConvexProgram build_collective_program(const MarketStatistics& stats, std::size_t k);

struct CollectiveResult {
  Decision decision;
  std::optional<AllocationSolution> allocation;
  double lower_bound = 0.0;
  std::size_t iterations = 0;
};

/// k = 1 is the exact HARP test. For k >= 2 a FEASIBLE answer always carries
/// an allocation that passes verify_allocation at tols.accept.
CollectiveResult check_collective(const MarketStatistics& stats, std::size_t k,
                                  const CollectiveTolerances& tols = {},
                                  const SolveOptions& options = {},
                                  const std::optional<AllocationSolution>& warm = std::nullopt);

/// Balance Σ_α q^α + γ = Q within relative tol, positivity, and each
/// consumer's Afriat inequalities at tol.
bool verify_allocation(const MarketStatistics& stats, const AllocationSolution& alloc,
                       double tol);

/// k+1 consumers: the last consumer's bundle is halved and duplicated with the
/// same multipliers.
AllocationSolution split_in_half(const AllocationSolution& alloc);

/// Per-consumer statistics (P, q^α).
MarketStatistics consumer_statistics(const MarketStatistics& stats,
                                     const AllocationSolution& alloc, std::size_t alpha);

enum class ClassNumberOutcome { kFound, kLowerBoundOnly, kNotFound };

struct ClassNumberResult {
  ClassNumberOutcome outcome = ClassNumberOutcome::kNotFound;
  /// Smallest accepted k (kFound, kLowerBoundOnly).
  std::optional<std::size_t> value;
  /// Every k below this one was rejected.
  std::size_t lower_bound = 1;
  std::map<std::size_t, Decision> per_k;
  std::optional<AllocationSolution> witness;
  std::size_t iterations = 0;
};

/// Tries k = 1, 2, ..., k_max (0 means n, a heuristic cap) and stops at the
/// first acceptance.
ClassNumberResult class_number(const MarketStatistics& stats, std::size_t k_max = 0,
                               const CollectiveTolerances& tols = {},
                               const SolveOptions& options = {});

}  // namespace phrev
