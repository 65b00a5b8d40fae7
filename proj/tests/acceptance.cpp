// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero if
// any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "phrev/collective.hpp"
#include "phrev/datagen.hpp"
#include "phrev/harp.hpp"
#include "phrev/oracle.hpp"
#include "phrev/report.hpp"
#include "phrev/separability.hpp"

namespace {

using namespace phrev;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string summary;
  Json record = Json::array();  // everything the criterion computed, no timings
  std::vector<std::string> failures;

  void fail(const std::string& why) {
    pass = false;
    if (failures.size() < 5) failures.push_back(why);
  }
};

Vector random_exponents(Rng& rng, std::size_t n) {
  Vector a(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = rng.uniform(0.5, 1.5);
  return a / a.sum();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---- instance families ----------------------------------------------------

MarketStatistics harp_instance(std::size_t i) {
  const std::size_t T = 2 + (i * 37) % 49;
  const std::size_t n = 2 + (i * 11) % 19;
  Rng rng(1000 + i);
  CobbDouglasSpec spec;
  spec.exponents = random_exponents(rng, n);
  spec.budget_lo = 0.5;
  spec.budget_hi = 2.0;
  spec.seed = 1000 + i;
  return gen_cobb_douglas(spec, T);
}

PartitionedStatistics nested_instance(std::size_t i) {
  Rng rng(2000 + i);
  CobbDouglasSpec q, y;
  q.exponents = random_exponents(rng, 3);
  y.exponents = random_exponents(rng, 3);
  q.budget_lo = 0.5;
  q.budget_hi = 2.0;
  const double a = rng.uniform(0.2, 0.8);
  return gen_nested_cd(q, y, {a, 1.0 - a}, 3 + i % 10, 2000 + i);
}

// Nested data whose quantities are perturbed until the y-block fails HARP.
PartitionedStatistics violating_instance(std::size_t i) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(3000 + 7919 * i + attempt);
    CobbDouglasSpec q, y;
    q.exponents = random_exponents(rng, 3);
    y.exponents = random_exponents(rng, 3);
    const auto clean = gen_nested_cd(q, y, {0.5, 0.5}, 10 + i % 5, 3000 + i + 100000 * attempt);
    const auto noisy = partition(perturb(clean.base(), 0.3, 3000 + i + attempt), {3, 4, 5});
    if (check_harp(noisy.y_data()).decision.status == Status::kInfeasible) return noisy;
  }
}

Vector skewed_exponents(std::size_t n, bool reversed) {
  Vector a(static_cast<Eigen::Index>(n));
  if (n == 2) a << 0.8, 0.2;
  else if (n == 3) a << 0.6, 0.3, 0.1;
  else a << 0.5, 0.3, 0.15, 0.05;
  if (reversed) a.reverseInPlace();
  return a;
}

struct Aggregate {
  std::uint64_t seed;
  CollectiveSample sample;
  double ratio;
};

// Twenty two-consumer aggregates (n = 2, 3, 4 in turn, T = 6) whose HARP cycle
// ratio is below 1 - 1e-3.
std::vector<Aggregate> violating_aggregates() {
  std::vector<Aggregate> out;
  std::uint64_t next_seed[5] = {0, 0, 0, 0, 0};
  for (std::size_t i = 0; i < 20; ++i) {
    const std::size_t n = 2 + i % 3;
    for (std::uint64_t& seed = next_seed[n];; ++seed) {
      CobbDouglasSpec a, b;
      a.exponents = skewed_exponents(n, false);
      b.exponents = skewed_exponents(n, true);
      a.budget_lo = b.budget_lo = 0.5;
      a.budget_hi = b.budget_hi = 2.0;
      CollectiveSample s = gen_collective({a, b}, 6, seed);
      const HarpResult h = check_harp(s.aggregate);
      if (h.decision.status == Status::kInfeasible && h.cycle->cycle_ratio < 1 - 1e-3) {
        out.push_back({seed, std::move(s), h.cycle->cycle_ratio});
        ++seed;
        break;
      }
    }
  }
  return out;
}

// Smallest product over all simple cycles (T <= 4).
double min_cycle_product(const MarketStatistics& s) {
  const std::size_t T = s.periods();
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(T);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t len = 2; len <= T; ++len) {
    std::vector<bool> pick(T, false);
    std::fill(pick.begin(), pick.begin() + static_cast<long>(len), true);
    do {
      std::vector<std::size_t> sub;
      for (std::size_t t = 0; t < T; ++t) if (pick[t]) sub.push_back(t);
      do {
        std::vector<std::size_t> closed = sub;
        closed.push_back(sub.front());
        best = std::min(best, cycle_ratio(s, closed));
      } while (std::next_permutation(sub.begin() + 1, sub.end()));
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }
  return best;
}

// ---- criteria ---------------------------------------------------------------

Outcome criterion_1() {
  Outcome o;
  std::size_t feasible = 0;
  double solve_time = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    const MarketStatistics s = harp_instance(i);
    const auto t0 = Clock::now();
    const HarpResult r = check_harp(s);
    solve_time += seconds_since(t0);
    o.record.push_back(harp_body(r));
    if (r.decision.status != Status::kFeasible) {
      o.fail("instance " + std::to_string(i) + " " + to_string(r.decision.status));
      continue;
    }
    if (!verify_certificate(s, *r.certificate)) {
      o.fail("instance " + std::to_string(i) + " certificate does not verify");
      continue;
    }
    ++feasible;
  }
  if (solve_time >= 5.0) o.fail("runtime " + fmt(solve_time) + " s");
  o.summary = std::to_string(feasible) + "/200 FEASIBLE with verified certificates, " +
              fmt(solve_time) + " s total";
  return o;
}

Outcome criterion_2() {
  Outcome o;
  Matrix P(2, 2), Q(2, 2);
  P << 1, 1, 2, 1;
  Q << 0.25, 0.5, 0.5, 0.5;
  const MarketStatistics s(P, Q);
  const HarpResult r = check_harp(s);
  o.record.push_back(harp_body(r));
  if (r.decision.status != Status::kInfeasible || !r.cycle) {
    o.fail("status " + to_string(r.decision.status));
    o.summary = "not rejected";
    return o;
  }
  if (r.cycle->periods != std::vector<std::size_t>{0, 1, 0}) o.fail("cycle is not the 2-cycle");
  const double err = std::abs(r.cycle->cycle_ratio - 8.0 / 9.0);
  if (err > 1e-12) o.fail("ratio error " + fmt(err));
  o.summary = "INFEASIBLE, cycle (1,2,1), |ratio - 8/9| = " + fmt(err);
  return o;
}

Outcome criterion_3() {
  Outcome o;
  double worst_fit = 0, worst_hom = 0;
  Rng rng(77);
  for (std::size_t i = 0; i < 200; ++i) {
    const MarketStatistics s = harp_instance(i);
    const HarpResult r = check_harp(s);
    if (r.decision.status != Status::kFeasible) {
      o.fail("instance " + std::to_string(i) + " not FEASIBLE");
      continue;
    }
    const PiecewiseLinearUtility f = recover_utility(*r.certificate, s);
    Json values = Json::array();
    for (std::size_t t = 0; t < s.periods(); ++t) {
      const Vector q = s.quantities().row(static_cast<Eigen::Index>(t)).transpose();
      const double expected = r.certificate->lambdas[static_cast<Eigen::Index>(t)] * s.expenditure(t);
      const double got = f(q);
      values.push_back(got);
      worst_fit = std::max(worst_fit, std::abs(got - expected) / expected);
      Vector x(q.size());
      for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = rng.uniform(0.01, 2.0);
      for (const Vector& v : {q, x}) {
        const double fv = f(v);
        for (double c : {0.5, 3.0}) {
          worst_hom = std::max(worst_hom, std::abs(f(c * v) - c * fv) / (c * fv));
        }
      }
    }
    o.record.push_back(values);
  }
  if (worst_fit > 1e-9) o.fail("fit error " + fmt(worst_fit));
  if (worst_hom > 1e-12) o.fail("homogeneity error " + fmt(worst_hom));
  o.summary = "max rel |f(q^t) - λ_t p^t q^t| = " + fmt(worst_fit) +
              ", max rel homogeneity error = " + fmt(worst_hom);
  return o;
}

Outcome criterion_4() {
  Outcome o;
  Rng rng(4);
  double worst = 0;
  std::size_t pairs = 0, constraints = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    LogConvexProgram program;
    if (i % 2 == 0) {
      program = build_separability_program(SeparabilityInstance(nested_instance(i)));
    } else {
      CobbDouglasSpec a, b;
      const std::size_t n = 2 + i % 3;
      a.exponents = skewed_exponents(n, false);
      b.exponents = skewed_exponents(n, true);
      program = build_collective_program(gen_collective({a, b}, 2 + i % 5, i).aggregate, 2 + i % 2);
    }
    // Random interior point: jitter the start, halving the jitter until every
    // constraint is finite.
    const Vector start = program.start();
    Vector x = start;
    for (double scale = 0.5; scale > 1e-6; scale /= 2) {
      Vector trial = start;
      for (Eigen::Index j = 0; j < trial.size(); ++j) {
        trial[j] += program.variables()[static_cast<std::size_t>(j)].kind == VariableKind::kLog
                        ? scale * rng.uniform(-1, 1)
                        : scale * rng.uniform(-0.5, 0.5) * std::abs(start[j]);
      }
      const bool interior = std::all_of(program.constraints().begin(), program.constraints().end(),
                                        [&](const ConstraintRecord& c) {
                                          return std::isfinite(eval_constraint(c, trial));
                                        });
      if (interior) {
        x = trial;
        break;
      }
    }
    ++pairs;
    double pair_worst = 0;
    for (const ConstraintRecord& c : program.constraints()) {
      if (!std::isfinite(eval_constraint(c, x))) continue;
      const Vector g = gradient(c, x);
      Vector fd(x.size());
      const double h = 1e-6;
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        Vector a = x, b = x;
        a[j] += h;
        b[j] -= h;
        fd[j] = (eval_constraint(c, a) - eval_constraint(c, b)) / (2 * h);
      }
      const double rel = (g - fd).norm() / std::max(g.norm(), 1e-12);
      pair_worst = std::max(pair_worst, rel);
      ++constraints;
    }
    worst = std::max(worst, pair_worst);
    o.record.push_back(pair_worst <= 1e-5);
  }
  if (worst > 1e-5) o.fail("worst relative error " + fmt(worst));
  o.summary = std::to_string(pairs) + " (program, point) pairs, " + std::to_string(constraints) +
              " constraints, worst relative gradient error " + fmt(worst);
  return o;
}

Outcome criterion_5() {
  Outcome o;
  std::size_t ok = 0;
  double slowest = 0, worst_opt = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    const PartitionedStatistics part = nested_instance(i);
    const auto t0 = Clock::now();
    const SeparabilityResult r = check_separability(part);
    const double dt = seconds_since(t0);
    slowest = std::max(slowest, dt);
    o.record.push_back(separability_body(r));
    const std::string tag = "instance " + std::to_string(i) + ": ";
    if (r.decision.status != Status::kFeasible) {
      o.fail(tag + separability_status(r.decision.status) + " (" + r.decision.detail + ")");
      continue;
    }
    const double opt = r.decision.optimum.value_or(1.0);
    worst_opt = std::max(worst_opt, opt);
    if (opt > 1e-6) o.fail(tag + "optimum " + fmt(opt));
    else if (!verify_separability_solution(SeparabilityInstance(part), r.lambdas, r.mus, 1e-6))
      o.fail(tag + "verification failed");
    else if (dt >= 10.0) o.fail(tag + "took " + fmt(dt) + " s");
    else ++ok;
  }
  o.summary = std::to_string(ok) + "/50 SEPARABLE and verified, max optimum " + fmt(worst_opt) +
              ", slowest " + fmt(slowest) + " s";
  return o;
}

Outcome criterion_6() {
  Outcome o;
  std::size_t rejected = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    const SeparabilityResult r = check_separability(violating_instance(i));
    o.record.push_back(separability_body(r));
    if (r.decision.status == Status::kInfeasible) ++rejected;
    else o.fail("instance " + std::to_string(i) + " " + separability_status(r.decision.status));
  }
  o.summary = std::to_string(rejected) + "/50 NOT_SEPARABLE";
  return o;
}

Outcome criterion_7() {
  Outcome o;
  double worst_eq = 0, worst_ineq = 0;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    const PartitionedStatistics part = nested_instance(i);
    const SeparabilityResult r = check_separability(part);
    if (r.decision.status != Status::kFeasible) continue;
    ++checked;
    const Matrix& x = part.y_data().prices();
    const Matrix& y = part.y_data().quantities();
    Json nus = Json::array();
    std::vector<double> nu(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      nu[static_cast<std::size_t>(t)] = young_transform(*r.subutility, x.row(t).transpose());
      nus.push_back(nu[static_cast<std::size_t>(t)]);
    }
    o.record.push_back(nus);
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      const double u = (*r.subutility)(y.row(t).transpose());
      for (Eigen::Index tau = 0; tau < x.rows(); ++tau) {
        const double lhs = nu[static_cast<std::size_t>(tau)] * u;
        const double rhs = x.row(tau).dot(y.row(t));
        if (tau == t) worst_eq = std::max(worst_eq, std::abs(lhs - rhs) / rhs);
        else worst_ineq = std::max(worst_ineq, lhs / rhs - 1.0);
      }
    }
  }
  if (checked != 50) o.fail("only " + std::to_string(checked) + " SEPARABLE instances");
  if (worst_eq > 1e-8) o.fail("equality error " + fmt(worst_eq));
  if (worst_ineq > 1e-8) o.fail("inequality excess " + fmt(worst_ineq));
  o.summary = std::to_string(checked) + " instances, max rel |ν(x^t)u(y^t) - x^t·y^t| = " +
              fmt(worst_eq) + ", max excess over x^τ·y^t = " + fmt(std::max(worst_ineq, 0.0));
  return o;
}

Outcome criterion_8() {
  Outcome o;
  std::size_t ok = 0;
  double slowest = 0;
  for (const Aggregate& a : violating_aggregates()) {
    const auto t0 = Clock::now();
    const ClassNumberResult r = class_number(a.sample.aggregate);
    const double dt = seconds_since(t0);
    slowest = std::max(slowest, dt);
    o.record.push_back(class_number_body(r));
    const std::string tag = "n=" + std::to_string(a.sample.aggregate.goods()) + " seed " +
                            std::to_string(a.seed) + ": ";
    if (r.outcome != ClassNumberOutcome::kFound || r.value != std::optional<std::size_t>(2)) {
      o.fail(tag + class_number_status(r.outcome) + " value " +
             (r.value ? std::to_string(*r.value) : "none"));
    } else if (!r.witness || !verify_allocation(a.sample.aggregate, *r.witness, 1e-6)) {
      o.fail(tag + "witness does not verify");
    } else if (dt >= 60.0) {
      o.fail(tag + "took " + fmt(dt) + " s");
    } else {
      ++ok;
    }
  }
  o.summary = std::to_string(ok) + "/20 aggregates with class number 2 and verified witness, slowest " +
              fmt(slowest) + " s";
  return o;
}

Outcome criterion_9() {
  Outcome o;
  std::size_t accepted = 0, preserved = 0;
  auto check = [&](const MarketStatistics& s, std::size_t k, const AllocationSolution& witness,
                   const std::string& tag) {
    ++accepted;
    const AllocationSolution split = split_in_half(witness);
    const CollectiveResult r = check_collective(s, k + 1, {}, {}, split);
    o.record.push_back(collective_body(r, k + 1));
    if (r.decision.status == Status::kFeasible && r.allocation &&
        verify_allocation(s, *r.allocation, 1e-6)) {
      ++preserved;
    } else {
      o.fail(tag + " k=" + std::to_string(k + 1) + " " + to_string(r.decision.status));
    }
  };
  for (const Aggregate& a : violating_aggregates()) {
    const CollectiveResult r = check_collective(a.sample.aggregate, 2);
    if (r.decision.status == Status::kFeasible) {
      check(a.sample.aggregate, 2, *r.allocation, "aggregate seed " + std::to_string(a.seed));
    }
  }
  for (std::size_t i = 0; i < 20; ++i) {
    const MarketStatistics s = harp_instance(i);
    const CollectiveResult r = check_collective(s, 1);
    if (r.decision.status == Status::kFeasible) {
      check(s, 1, *r.allocation, "harp instance " + std::to_string(i));
    }
  }
  if (accepted == 0) o.fail("no accepted instances");
  o.summary = std::to_string(preserved) + "/" + std::to_string(accepted) +
              " accepted (instance, k) pairs also accepted at k+1";
  return o;
}

struct Agreement {
  std::size_t decided = 0, agree = 0, excluded = 0;
};

std::string agreement_text(const std::string& name, const Agreement& a) {
  return name + " " + std::to_string(a.agree) + "/" + std::to_string(a.decided) +
         " (excluded " + std::to_string(a.excluded) + ")";
}

Outcome criterion_10() {
  Outcome o;
  const double tol = GridSpec{}.tolerance;
  auto near_boundary = [&](double product) { return std::abs(product - 1.0) < 10 * tol; };
  auto tally = [&](Agreement& a, Status pipeline, Status oracle, const std::string& tag) {
    o.record.push_back(Json::array({to_string(pipeline), to_string(oracle)}));
    if (pipeline == Status::kUndecided || oracle == Status::kUndecided) return;
    ++a.decided;
    if (pipeline == oracle) ++a.agree;
    else o.fail(tag + ": pipeline " + to_string(pipeline) + ", oracle " + to_string(oracle));
  };

  // HARP: T in [1, 4], n in [2, 3]; exact Cobb-Douglas, perturbed, and random data.
  Agreement harp;
  for (std::size_t i = 0; i < 50; ++i) {
    Rng rng(5000 + i);
    const std::size_t T = 1 + i % 4, n = 2 + i % 2;
    MarketStatistics s = [&] {
      if (i % 3 == 2) {
        Matrix P(T, n), Q(T, n);
        for (Eigen::Index j = 0; j < P.size(); ++j) {
          P.data()[j] = rng.log_uniform(0.2, 5);
          Q.data()[j] = rng.log_uniform(0.2, 5);
        }
        return MarketStatistics(P, Q);
      }
      CobbDouglasSpec spec;
      spec.exponents = random_exponents(rng, n);
      spec.budget_lo = 0.5;
      spec.budget_hi = 2;
      spec.seed = 5000 + i;
      const MarketStatistics cd = gen_cobb_douglas(spec, T);
      return i % 3 == 1 ? perturb(cd, 0.3, i) : cd;
    }();
    if (T > 1 && near_boundary(min_cycle_product(s))) {
      ++harp.excluded;
      continue;
    }
    tally(harp, check_harp(s).decision.status, oracle_harp(s).decision.status,
          "harp " + std::to_string(i));
  }

  // Separability: T in [1, 3], one or two goods per block.
  Agreement sep;
  for (std::size_t i = 0; i < 50; ++i) {
    Rng rng(6000 + i);
    const std::size_t T = 1 + i % 3;
    const std::size_t k = 1 + i % 2, l = 1 + (i / 2) % 2;
    CobbDouglasSpec q, y;
    q.exponents = random_exponents(rng, k);
    y.exponents = random_exponents(rng, l);
    q.budget_lo = 0.5;
    q.budget_hi = 2;
    const double a = rng.uniform(0.2, 0.8);
    const auto clean = gen_nested_cd(q, y, {a, 1 - a}, T, 6000 + i);
    std::vector<std::size_t> yb;
    for (std::size_t j = k; j < k + l; ++j) yb.push_back(j);
    // Clean, perturbed, or unstructured data, chosen independently of T.
    const PartitionedStatistics part = [&] {
      switch ((i / 3) % 3) {
        case 0: return clean;
        case 1: return partition(perturb(clean.base(), 0.4, 6000 + i), yb);
        default: {
          Matrix P(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(k + l));
          Matrix Q(P.rows(), P.cols());
          for (Eigen::Index j = 0; j < P.size(); ++j) {
            P.data()[j] = rng.log_uniform(0.2, 5);
            Q.data()[j] = rng.log_uniform(0.2, 5);
          }
          return partition(MarketStatistics(P, Q), yb);
        }
      }
    }();
    // A one-good block has every cycle product exactly 1; nothing to resolve.
    if (T > 1 && ((l > 1 && near_boundary(min_cycle_product(part.y_data()))) ||
                  near_boundary(min_cycle_product(part.base())))) {
      ++sep.excluded;
      continue;
    }
    tally(sep, check_separability(part).decision.status, oracle_separability(part).decision.status,
          "separability " + std::to_string(i));
  }

  // Collective: T = n = 2, k in {1, 2}; random data and two-consumer aggregates.
  Agreement coll;
  for (std::size_t i = 0; i < 50; ++i) {
    Rng rng(7000 + i);
    const std::size_t k = 1 + i % 2;
    MarketStatistics s = [&] {
      if (i % 4 < 2) {
        Matrix P(2, 2), Q(2, 2);
        for (Eigen::Index j = 0; j < 4; ++j) {
          P.data()[j] = rng.log_uniform(0.2, 5);
          Q.data()[j] = rng.log_uniform(0.2, 5);
        }
        return MarketStatistics(P, Q);
      }
      CobbDouglasSpec a, b;
      a.exponents = random_exponents(rng, 2);
      b.exponents = random_exponents(rng, 2);
      a.budget_lo = b.budget_lo = 0.5;
      a.budget_hi = b.budget_hi = 2;
      return gen_collective({a, b}, 2, 7000 + i).aggregate;
    }();
    if (near_boundary(min_cycle_product(s))) {
      ++coll.excluded;
      continue;
    }
    tally(coll, check_collective(s, k).decision.status, oracle_collective(s, k).decision.status,
          "collective " + std::to_string(i) + " k=" + std::to_string(k));
  }

  for (const Agreement* a : {&harp, &sep, &coll}) {
    if (a->decided < 10) o.fail("fewer than 10 mutually decided cases");
  }
  o.summary = agreement_text("harp", harp) + ", " + agreement_text("separability", sep) + ", " +
              agreement_text("collective", coll) + " mutually decided agree";
  return o;
}

using Criterion = std::function<Outcome()>;

}  // namespace

int main() {
  const std::vector<std::pair<std::string, Criterion>> criteria = {
      {"HARP correctness", criterion_1},
      {"HARP rejection", criterion_2},
      {"Utility reconstruction", criterion_3},
      {"Solver gradient check", criterion_4},
      {"Separability acceptance", criterion_5},
      {"Separability rejection", criterion_6},
      {"Young-transform duality", criterion_7},
      {"Collective rationality", criterion_8},
      {"Monotonicity in k", criterion_9},
      {"Oracle agreement", criterion_10},
  };

  bool all = true;
  std::vector<std::string> first_records;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
      o.summary = "aborted";
    }
    first_records.push_back(o.record.dump());
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " ("
              << criteria[i].first << "): " << o.summary << " [" << fmt(seconds_since(t0))
              << " s]\n";
    for (const std::string& f : o.failures) std::cout << "    " << f << "\n";
    std::cout.flush();
  }

  // Criterion 11: every criterion again, byte-for-byte identical records.
  {
    const auto t0 = Clock::now();
    std::size_t same = 0;
    std::vector<std::string> diffs;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
      std::string again;
      try {
        again = criteria[i].second().record.dump();
      } catch (const std::exception& e) {
        again = std::string("exception: ") + e.what();
      }
      if (again == first_records[i]) ++same;
      else diffs.push_back("criterion " + std::to_string(i + 1) + " differs on rerun");
    }
    const bool pass = same == criteria.size();
    all = all && pass;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion 11 (Determinism): " << same << "/"
              << criteria.size() << " criteria reproduce bitwise-identical JSON records ["
              << fmt(seconds_since(t0)) << " s]\n";
    for (const std::string& d : diffs) std::cout << "    " << d << "\n";
  }
  std::cout << (all ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL") << "\n";
  return all ? 0 : 1;
}
