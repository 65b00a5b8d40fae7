#include "phrev/datagen.hpp"

#include <cmath>

namespace phrev {

void CobbDouglasSpec::validate() const {
  if (exponents.size() == 0) throw Error(ErrorCode::kInvalidArgument, "no goods");
  if (!(exponents.array() > 0.0).all()) {
    throw Error(ErrorCode::kInvalidArgument, "exponents must be positive");
  }
  if (std::abs(exponents.sum() - 1.0) > 1e-12) {
    throw Error(ErrorCode::kInvalidArgument, "exponents must sum to 1");
  }
  if (!(budget_lo > 0.0) || !(budget_hi >= budget_lo) || !std::isfinite(budget_hi)) {
    throw Error(ErrorCode::kInvalidArgument, "budget range must satisfy 0 < lo <= hi");
  }
  if (!(price_lo > 0.0) || !(price_hi >= price_lo) || !std::isfinite(price_hi)) {
    throw Error(ErrorCode::kInvalidArgument, "price range must satisfy 0 < lo <= hi");
  }
}

double Rng::log_uniform(double lo, double hi) {
  if (lo == hi) return lo;
  return std::exp(uniform(std::log(lo), std::log(hi)));
}

Vector cobb_douglas_demand(const Vector& exponents, const Vector& prices, double budget) {
  return (exponents.array() * budget / prices.array()).matrix();
}

double cobb_douglas_multiplier(const Vector& exponents, const Vector& prices) {
  double log_value = 0.0;
  for (Eigen::Index i = 0; i < exponents.size(); ++i) {
    log_value += exponents[i] * std::log(exponents[i] / prices[i]);
  }
  return std::exp(log_value);
}

namespace {

Vector draw_prices(Rng& rng, Eigen::Index n, double lo, double hi) {
  Vector p(n);
  for (Eigen::Index i = 0; i < n; ++i) p[i] = rng.log_uniform(lo, hi);
  return p;
}

}  // namespace

MarketStatistics gen_cobb_douglas(const CobbDouglasSpec& spec, std::size_t periods) {
  spec.validate();
  if (periods == 0) throw Error(ErrorCode::kInvalidArgument, "need at least one period");
  const Eigen::Index n = spec.exponents.size();
  const Eigen::Index T = static_cast<Eigen::Index>(periods);
  Rng rng(spec.seed);
  Matrix P(T, n);
  Matrix Q(T, n);
  for (Eigen::Index t = 0; t < T; ++t) {
    const Vector p = draw_prices(rng, n, spec.price_lo, spec.price_hi);
    const double m = rng.log_uniform(spec.budget_lo, spec.budget_hi);
    P.row(t) = p.transpose();
    Q.row(t) = cobb_douglas_demand(spec.exponents, p, m).transpose();
  }
  return MarketStatistics(std::move(P), std::move(Q));
}

PartitionedStatistics gen_nested_cd(const CobbDouglasSpec& q_spec, const CobbDouglasSpec& y_spec,
                                    std::pair<double, double> top_shares, std::size_t periods,
                                    std::uint64_t seed) {
  q_spec.validate();
  y_spec.validate();
  const auto [a, b] = top_shares;
  if (!(a > 0.0) || !(b > 0.0) || std::abs(a + b - 1.0) > 1e-12) {
    throw Error(ErrorCode::kInvalidArgument, "top shares must be positive and sum to 1");
  }
  if (periods == 0) throw Error(ErrorCode::kInvalidArgument, "need at least one period");
  const Eigen::Index k = q_spec.exponents.size();
  const Eigen::Index l = y_spec.exponents.size();
  const Eigen::Index T = static_cast<Eigen::Index>(periods);
  Rng rng(seed);
  Matrix P(T, k + l);
  Matrix Q(T, k + l);
  for (Eigen::Index t = 0; t < T; ++t) {
    const Vector p = draw_prices(rng, k, q_spec.price_lo, q_spec.price_hi);
    const Vector x = draw_prices(rng, l, y_spec.price_lo, y_spec.price_hi);
    const double m = rng.log_uniform(q_spec.budget_lo, q_spec.budget_hi);
    P.row(t) << p.transpose(), x.transpose();
    Q.row(t) << cobb_douglas_demand(q_spec.exponents, p, a * m).transpose(),
        cobb_douglas_demand(y_spec.exponents, x, b * m).transpose();
  }
  std::vector<std::size_t> y_block;
  for (Eigen::Index j = 0; j < l; ++j) y_block.push_back(static_cast<std::size_t>(k + j));
  return partition(MarketStatistics(std::move(P), std::move(Q)), y_block);
}

CollectiveSample gen_collective(const std::vector<CobbDouglasSpec>& specs, std::size_t periods,
                                std::uint64_t seed) {
  if (specs.empty()) throw Error(ErrorCode::kInvalidArgument, "need at least one consumer");
  if (periods == 0) throw Error(ErrorCode::kInvalidArgument, "need at least one period");
  const Eigen::Index n = specs.front().exponents.size();
  for (const CobbDouglasSpec& s : specs) {
    s.validate();
    if (s.exponents.size() != n) {
      throw Error(ErrorCode::kShapeMismatch, "consumers must share the number of goods");
    }
  }
  const std::size_t k = specs.size();
  const Eigen::Index T = static_cast<Eigen::Index>(periods);
  Rng rng(seed);
  Matrix P(T, n);
  AllocationSolution witness;
  witness.k = k;
  witness.sub_quantities.assign(k, Matrix(T, n));
  witness.sub_lambdas.resize(static_cast<Eigen::Index>(k), T);
  witness.residuals = Matrix::Zero(T, n);
  for (Eigen::Index t = 0; t < T; ++t) {
    const Vector p = draw_prices(rng, n, specs.front().price_lo, specs.front().price_hi);
    P.row(t) = p.transpose();
    for (std::size_t a = 0; a < k; ++a) {
      const double m = rng.log_uniform(specs[a].budget_lo, specs[a].budget_hi);
      witness.sub_quantities[a].row(t) = cobb_douglas_demand(specs[a].exponents, p, m).transpose();
      witness.sub_lambdas(static_cast<Eigen::Index>(a), t) =
          cobb_douglas_multiplier(specs[a].exponents, p);
    }
  }
  Matrix Q = Matrix::Zero(T, n);
  for (const Matrix& q : witness.sub_quantities) Q += q;
  for (std::size_t a = 0; a < k; ++a) {
    const Eigen::Index A = static_cast<Eigen::Index>(a);
    witness.sub_lambdas.row(A) /= witness.sub_lambdas.row(A).sum();
  }
  return CollectiveSample{MarketStatistics(std::move(P), std::move(Q)), std::move(witness)};
}

MarketStatistics perturb(const MarketStatistics& stats, double noise, std::uint64_t seed) {
  if (!(noise >= 0.0) || !(noise < 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "noise must lie in [0, 0.5)");
  }
  Rng rng(seed);
  Matrix Q = stats.quantities();
  for (Eigen::Index t = 0; t < Q.rows(); ++t) {
    for (Eigen::Index i = 0; i < Q.cols(); ++i) {
      if (noise > 0.0) Q(t, i) *= rng.uniform(1.0 - noise, 1.0 + noise);
    }
  }
  return MarketStatistics(stats.prices(), std::move(Q));
}

}  // namespace phrev
