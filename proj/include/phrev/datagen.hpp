#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "phrev/collective.hpp"
#include "phrev/model.hpp"

namespace phrev {

/// Cobb-Douglas consumer u(q) = Π q_i^{a_i}, Σ a_i = 1. Each period's budget
/// is drawn log-uniformly from [budget_lo, budget_hi] (a constant when equal);
/// prices log-uniformly from [price_lo, price_hi].
struct CobbDouglasSpec {
  Vector exponents;
  double budget_lo = 1.0;
  double budget_hi = 1.0;
  double price_lo = 0.2;
  double price_hi = 5.0;
  std::uint64_t seed = 0;

  /// Throws kInvalidArgument on bad exponents or ranges.
  void validate() const;
};

/// Deterministic stream: mt19937_64 bits mapped to [0, 1) with 53-bit
/// resolution, so sequences do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double log_uniform(double lo, double hi);
  std::size_t index(std::size_t count) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(count));
  }

 private:
  std::mt19937_64 engine_;
};

/// q_i = a_i · m / p_i, the exact demand.
Vector cobb_douglas_demand(const Vector& exponents, const Vector& prices, double budget);

/// Afriat multiplier of a Cobb-Douglas consumer at prices p: Π (a_i / p_i)^{a_i}.
double cobb_douglas_multiplier(const Vector& exponents, const Vector& prices);

MarketStatistics gen_cobb_douglas(const CobbDouglasSpec& spec, std::size_t periods);

/// Two-level Cobb-Douglas: share a of each period's budget goes to the
/// q-goods, share b to the y-goods. Prices of each block use its own spec's
/// range; the budget uses q_spec's range; `seed` drives everything. The
/// y-block occupies the last columns.
PartitionedStatistics gen_nested_cd(const CobbDouglasSpec& q_spec, const CobbDouglasSpec& y_spec,
                                    std::pair<double, double> top_shares, std::size_t periods,
                                    std::uint64_t seed);

struct CollectiveSample {
  MarketStatistics aggregate;
  AllocationSolution witness;
};

/// Sum of Cobb-Douglas demands under one shared price draw (range of
/// specs[0]); each consumer draws its own budgets from its range.
CollectiveSample gen_collective(const std::vector<CobbDouglasSpec>& specs, std::size_t periods,
                                std::uint64_t seed);

/// Each quantity times an independent factor in [1 − noise, 1 + noise].
MarketStatistics perturb(const MarketStatistics& stats, double noise, std::uint64_t seed);

}  // namespace phrev
