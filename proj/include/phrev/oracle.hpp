#pragma once

// Brute-force deciders for tiny instances. They share no code with the
// decision pipeline beyond the data types.

#include <cstddef>
#include <optional>

#include "phrev/model.hpp"

namespace phrev {

struct GridSpec {
  /// Grid denominator; 0 picks 10000, 600 and 100 for one, two and three
  /// free dimensions and 40 beyond.
  std::size_t resolution = 0;
  /// Relative slack when testing inequalities at a grid point.
  double tolerance = 1e-6;
};

struct OracleResult {
  Decision decision;
  /// Lexicographically smallest passing grid point, when FEASIBLE: λ for
  /// HARP, (λ, μ) stacked for separability, consumer-1 split fractions
  /// (row-major T×n) for collective.
  std::optional<Vector> witness;
};

/// T <= 4. Grid over the λ simplex; INFEASIBLE only from an exact 2- or
/// 3-cycle with product below 1 − 10·tol.
OracleResult oracle_harp(const MarketStatistics& stats, const GridSpec& grid = {});

/// T <= 3. With λ_1 = 1, grid over each λ_t within the interval the y-block
/// allows; for each λ the μ system is decided exactly through its 2- and
/// 3-cycles. INFEASIBLE from exact short cycles on the y-block or on the
/// full data.
OracleResult oracle_separability(const PartitionedStatistics& part, const GridSpec& grid = {});

/// T <= 2, n <= 2, k <= 2. Grid over the fraction of each Q^t_i given to
/// consumer 1; each consumer is then decided by its exact 2-cycle product.
/// Without a passing split the answer is UNDECIDED.
OracleResult oracle_collective(const MarketStatistics& stats, std::size_t k,
                               const GridSpec& grid = {});

}  // namespace phrev
