#include <cmath>

#include <gtest/gtest.h>

#include "phrev/datagen.hpp"
#include "phrev/separability.hpp"
#include "support.hpp"

namespace phrev {
namespace {

using test::rows;
using test::vec;

PartitionedStatistics nested(std::size_t T, std::uint64_t seed) {
  CobbDouglasSpec q, y;
  q.exponents = vec({0.6, 0.4});
  y.exponents = vec({0.6, 0.4});
  return gen_nested_cd(q, y, {0.5, 0.5}, T, seed);
}

// The HARP-violating worked example as the y-block, any q-block.
PartitionedStatistics violating_y_block() {
  const MarketStatistics s(rows({{3, 0.5, 1, 1}, {1, 2, 2, 1}}),
                           rows({{0.7, 1.1, 0.25, 0.5}, {0.4, 0.9, 0.5, 0.5}}));
  return partition(s, {2, 3});
}

TEST(Separability, ProgramShape) {
  const SeparabilityInstance inst(nested(2, 4));
  const LogConvexProgram p = build_separability_program(inst);
  std::size_t i = 0, ii = 0, tight = 0;
  for (const ConstraintRecord& c : p.constraints()) {
    if (c.label.rfind("i[", 0) == 0) ++i;
    if (c.label.rfind("ii[", 0) == 0) ++ii;
    if (c.tight) ++tight;
  }
  EXPECT_EQ(i, 4u);
  EXPECT_EQ(ii, 4u);
  EXPECT_EQ(tight, 1u);
  EXPECT_EQ(p.dimension(), 5u);
  EXPECT_TRUE(solve(p).status == Status::kFeasible);
}

TEST(Separability, InstanceCaches) {
  const auto part = nested(3, 1);
  const SeparabilityInstance inst(part);
  const auto& b = part.base();
  EXPECT_NEAR(inst.expenditure(1), b.expenditure(1), 1e-14);
  EXPECT_NEAR(inst.pq(0, 2), part.q_data().cost(0, 2), 1e-15);
  EXPECT_NEAR(inst.xy(2, 0), part.y_data().cost(2, 0), 1e-15);
}

TEST(Separability, SinglePeriod) {
  const MarketStatistics s(rows({{1, 2, 3}}), rows({{1, 1, 1}}));
  const SeparabilityResult r = check_separability(partition(s, {2}));
  ASSERT_EQ(r.decision.status, Status::kFeasible) << r.decision.detail;
  EXPECT_NEAR(r.lambdas[0], 1.0, 1e-15);
  EXPECT_NEAR(r.mus[0], 1.0, 1e-15);
  EXPECT_TRUE(verify_separability_solution(SeparabilityInstance(partition(s, {2})), r.lambdas,
                                           r.mus, 0.0));
}

TEST(Separability, WorkedNestedExample) {
  // u = q1^0.3 q2^0.2 v^0.5, v = y1^0.6 y2^0.4, unit budgets.
  CobbDouglasSpec q, y;
  q.exponents = vec({0.6, 0.4});
  y.exponents = vec({0.6, 0.4});
  const auto part = gen_nested_cd(q, y, {0.5, 0.5}, 8, 2024);
  const SeparabilityResult r = check_separability(part);
  ASSERT_EQ(r.decision.status, Status::kFeasible) << r.decision.detail;
  ASSERT_TRUE(r.decision.optimum);
  EXPECT_LE(*r.decision.optimum, 1e-6);
  EXPECT_NEAR(r.lambdas.sum(), 1.0, 1e-12);
  EXPECT_NEAR(r.mus.maxCoeff(), 1.0, 1e-15);
  const SeparabilityInstance inst(part);
  EXPECT_TRUE(verify_separability_solution(inst, r.lambdas, r.mus, 1e-6));
  EXPECT_TRUE(r.violations.empty());
  ASSERT_TRUE(r.subutility && r.macro);

  const Matrix& x = part.y_data().prices();
  const Matrix& yq = part.y_data().quantities();
  const Matrix& p = part.q_data().prices();
  const Matrix& qq = part.q_data().quantities();
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const double xy = x.row(t).dot(yq.row(t));
    const double u1 = (*r.subutility)(yq.row(t).transpose());
    EXPECT_NEAR(u1, r.lambdas[t] * xy, 1e-9 * u1);
    const double u0 = (*r.macro)(qq.row(t).transpose(), u1);
    EXPECT_NEAR(u0, r.mus[t] * inst.expenditure(static_cast<std::size_t>(t)), 1e-6 * u0);
    (void)p;
  }
  // Homogeneity of both levels.
  const Vector yv = vec({0.3, 0.8});
  EXPECT_NEAR((*r.subutility)(3 * yv), 3 * (*r.subutility)(yv), 1e-14);
  const Vector qv = vec({0.2, 0.5});
  EXPECT_NEAR((*r.macro)(2 * qv, 2 * 0.7), 2 * (*r.macro)(qv, 0.7), 1e-14);
}

TEST(Separability, PerturbedLambdaFailsVerification) {
  const auto part = nested(6, 99);
  const SeparabilityResult r = check_separability(part);
  ASSERT_EQ(r.decision.status, Status::kFeasible);
  const SeparabilityInstance inst(part);
  bool any_false = false;
  for (Eigen::Index t = 0; t < r.lambdas.size(); ++t) {
    Vector lam = r.lambdas;
    lam[t] *= 1.1;
    lam /= lam.sum();
    any_false = any_false || !verify_separability_solution(inst, lam, r.mus, 1e-6);
  }
  EXPECT_TRUE(any_false);
}

TEST(Separability, ViolatingYBlockIsRejected) {
  const SeparabilityResult r = check_separability(violating_y_block());
  EXPECT_EQ(r.decision.status, Status::kInfeasible);
  ASSERT_TRUE(r.cycle);
  EXPECT_NEAR(r.cycle->cycle_ratio, 8.0 / 9.0, 1e-12);
  EXPECT_FALSE(r.violations.empty());
}

TEST(Separability, PeriodScaleInvariance) {
  // Scaling every price of one period leaves all budget sets unchanged.
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto part = nested(5, seed);
    Matrix P = part.base().prices();
    P.row(2) *= 4.0;
    const auto scaled = partition(MarketStatistics(P, part.base().quantities()), {2, 3});
    EXPECT_EQ(check_separability(scaled).decision.status, check_separability(part).decision.status);
  }
  const auto bad = violating_y_block();
  Matrix P = bad.base().prices();
  P.row(1) *= 0.3;
  EXPECT_EQ(check_separability(partition(MarketStatistics(P, bad.base().quantities()), {2, 3}))
                .decision.status,
            Status::kInfeasible);
}

TEST(Separability, YBlockScalingPreservesYBlockRejection) {
  const auto bad = violating_y_block();
  Matrix P = bad.base().prices();
  P.block(1, 2, 1, 2) *= 0.3;
  EXPECT_EQ(check_separability(partition(MarketStatistics(P, bad.base().quantities()), {2, 3}))
                .decision.status,
            Status::kInfeasible);
}

TEST(Separability, YBlockScalingAloneCanBreakSeparability) {
  // Rescaling only the y-prices of one period changes the relative price of
  // the two blocks; here the full data then fails HARP.
  const auto part = nested(5, 5);
  ASSERT_EQ(check_separability(part).decision.status, Status::kFeasible);
  Matrix P = part.base().prices();
  P.block(2, 2, 1, 2) *= 4.0;
  const MarketStatistics scaled(P, part.base().quantities());
  const SeparabilityResult r = check_separability(partition(scaled, {2, 3}));
  EXPECT_EQ(r.decision.status, Status::kInfeasible);
  ASSERT_TRUE(r.cycle);
  EXPECT_LT(cycle_ratio(scaled, r.cycle->periods), 1.0);
}

TEST(Separability, NecessityChain) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto part = nested(7, seed + 40);
    const MarketStatistics noisy = perturb(part.base(), 0.05, seed);
    const auto np = partition(noisy, {2, 3});
    if (check_separability(np).decision.status != Status::kFeasible) continue;
    EXPECT_EQ(check_harp(np.y_data()).decision.status, Status::kFeasible);
    EXPECT_EQ(check_harp(noisy).decision.status, Status::kFeasible);
  }
}

TEST(Separability, ReconstructionErrors) {
  EXPECT_THROW(reconstruct_subutility(vec({1, -1}), rows({{1, 1}, {1, 1}})), Error);
  EXPECT_THROW(reconstruct_subutility(vec({1}), rows({{1, 1}, {1, 1}})), Error);
  EXPECT_THROW(reconstruct_macro_utility(vec({1, 0}), vec({1, 1}), rows({{1, 1}, {1, 1}})), Error);
}

TEST(Separability, SmallReconstructionExamples) {
  const PiecewiseLinearUtility u = reconstruct_subutility(vec({1}), rows({{1, 2}}));
  EXPECT_DOUBLE_EQ(u(vec({1, 1})), 3.0);
  const MacroUtility m = reconstruct_macro_utility(vec({1}), vec({1}), rows({{1, 1}}));
  EXPECT_DOUBLE_EQ(m(vec({1, 1}), 2.0), 4.0);
}

TEST(Separability, YoungTransform) {
  const auto& ex = test::frozen()["worked_examples"];
  const PiecewiseLinearUtility u = reconstruct_subutility(vec({1}), rows({{1, 1}}));
  EXPECT_NEAR(young_transform(u, vec({1, 1})), ex["young_single_piece"].get<double>(), 1e-12);
  EXPECT_NEAR(young_transform(u, vec({2.5, 2.5})), 2.5, 1e-12);

  for (const auto& e : test::frozen()["young_corpus"]) {
    const PiecewiseLinearUtility f(test::vector_from(e["lambdas"]), test::matrix_from(e["prices"]));
    const Vector w = test::vector_from(e["w"]);
    const double v = e["value"].get<double>();
    EXPECT_NEAR(young_transform(f, w), v, 1e-9 * v);
    EXPECT_NEAR(young_transform(f, 3.0 * w), 3.0 * v, 3e-9 * v);
  }
}

TEST(Separability, ReconstructionOptimalityOnBudgetFacet) {
  const auto part = nested(5, 8);
  const SeparabilityResult r = check_separability(part);
  ASSERT_EQ(r.decision.status, Status::kFeasible);
  const Matrix& x = part.y_data().prices();
  const Matrix& y = part.y_data().quantities();
  Rng rng(1);
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const double budget = x.row(t).dot(y.row(t));
    const double best = (*r.subutility)(y.row(t).transpose());
    for (int k = 0; k < 100; ++k) {
      Vector z(x.cols());
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.uniform(0.01, 1);
      z *= budget / x.row(t).dot(z);
      EXPECT_LE((*r.subutility)(z), best * (1 + 1e-9));
    }
  }
}

TEST(Separability, ToleranceValidation) {
  EXPECT_THROW(check_separability(nested(2, 0), {1e-4, 1e-6}), Error);
}

}  // namespace
}  // namespace phrev
