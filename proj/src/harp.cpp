#include "phrev/harp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace phrev {

CrossGraph build_cross_graph(const MarketStatistics& stats) {
  const std::size_t T = stats.periods();
  Matrix w = Matrix::Zero(T, T);
  for (std::size_t from = 0; from < T; ++from) {
    for (std::size_t to = 0; to < T; ++to) {
      if (from == to) continue;
      w(from, to) = std::log(stats.cost(from, to)) - std::log(stats.expenditure(to));
    }
  }
  return CrossGraph(std::move(w));
}

namespace {

// A cycle in the predecessor graph, or empty. Every such cycle is negative
// because edges only enter it through strict improvements.
std::vector<std::size_t> predecessor_cycle(const std::vector<std::size_t>& pred) {
  const std::size_t T = pred.size();
  std::vector<int> state(T, 0);  // 0 unseen, 1 on current walk, 2 finished
  for (std::size_t start = 0; start < T; ++start) {
    std::size_t v = start;
    while (v < T && state[v] == 0) {
      state[v] = 1;
      v = pred[v];
    }
    if (v < T && state[v] == 1) {
      std::vector<std::size_t> reversed{v};
      for (std::size_t u = pred[v]; u != v; u = pred[u]) reversed.push_back(u);
      for (std::size_t u = start; u < T && state[u] == 1; u = pred[u]) state[u] = 2;
      return {reversed.rbegin(), reversed.rend()};
    }
    for (std::size_t u = start; u < T && state[u] == 1; u = pred[u]) state[u] = 2;
  }
  return {};
}

}  // namespace

DifferenceSolution solve_difference_constraints(const Matrix& bound) {
  const std::size_t T = static_cast<std::size_t>(bound.rows());
  std::vector<double> dist(T, 0.0);
  std::vector<std::size_t> pred(T, T);  // T marks the virtual source.

  DifferenceSolution out;
  // Without a negative cycle the sweep settles within T passes; with one the
  // predecessor graph closes a cycle soon after.
  const std::size_t max_passes = 64 * (T + 1);
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    bool updated = false;
    for (std::size_t from = 0; from < T; ++from) {
      for (std::size_t to = 0; to < T; ++to) {
        if (from == to) continue;
        const double candidate = dist[from] + bound(from, to);
        if (candidate < dist[to]) {
          dist[to] = candidate;
          pred[to] = from;
          updated = true;
        }
      }
    }
    if (!updated) {
      out.potentials = Eigen::Map<Vector>(dist.data(), static_cast<Eigen::Index>(T));
      return out;
    }
    out.cycle = predecessor_cycle(pred);
    if (!out.cycle.empty()) {
      std::rotate(out.cycle.begin(),
                  std::min_element(out.cycle.begin(), out.cycle.end()),
                  out.cycle.end());
      return out;
    }
  }
  throw Error(ErrorCode::kDomainViolation,
              "difference constraints did not settle; non-finite bounds?");
}

double cycle_ratio(const MarketStatistics& stats,
                   const std::vector<std::size_t>& closed_periods) {
  double ratio = 1.0;
  for (std::size_t i = 0; i + 1 < closed_periods.size(); ++i) {
    const std::size_t a = closed_periods[i];
    const std::size_t b = closed_periods[i + 1];
    ratio *= stats.cost(a, b) / stats.expenditure(b);
  }
  return ratio;
}

namespace {

ViolationCycle make_cycle(const MarketStatistics& stats, const CrossGraph& graph,
                          const std::vector<std::size_t>& open_cycle) {
  ViolationCycle cycle;
  cycle.periods = open_cycle;
  cycle.periods.push_back(open_cycle.front());
  for (std::size_t i = 0; i + 1 < cycle.periods.size(); ++i) {
    cycle.log_weight += graph.weight(cycle.periods[i], cycle.periods[i + 1]);
  }
  cycle.cycle_ratio = cycle_ratio(stats, cycle.periods);
  return cycle;
}

AfriatCertificate certificate_from_potentials(const Vector& potentials) {
  const double top = potentials.maxCoeff();
  Vector lambdas = (potentials.array() - top).exp().matrix();
  lambdas /= lambdas.sum();
  return AfriatCertificate{std::move(lambdas)};
}

}  // namespace

HarpResult check_harp(const MarketStatistics& stats, double tol) {
  if (!(tol > 0.0) || tol > 1e-2) {
    throw Error(ErrorCode::kInvalidArgument, "tolerance must lie in (0, 1e-2]");
  }
  const CrossGraph graph = build_cross_graph(stats);
  const std::size_t T = graph.nodes();

  HarpResult result;
  const DifferenceSolution exact = solve_difference_constraints(graph.weights());
  if (exact.potentials) {
    result.decision.status = Status::kFeasible;
    result.decision.detail = "no negative cycle";
    result.certificate = certificate_from_potentials(*exact.potentials);
    return result;
  }

  ViolationCycle worst = make_cycle(stats, graph, exact.cycle);

  // Loosening every edge by tol/T removes exactly the cycles whose weight is
  // within the band, so what survives is a genuine violation.
  Matrix loosened = graph.weights().array() + tol / static_cast<double>(T);
  loosened.diagonal().setZero();
  const DifferenceSolution relaxed = solve_difference_constraints(loosened);
  if (relaxed.potentials) {
    result.certificate = certificate_from_potentials(*relaxed.potentials);
  } else {
    ViolationCycle other = make_cycle(stats, graph, relaxed.cycle);
    if (other.log_weight < worst.log_weight) worst = std::move(other);
  }

  if (worst.log_weight < -tol && worst.cycle_ratio < 1.0 - tol) {
    result.decision.status = Status::kInfeasible;
    result.decision.detail = "negative cycle of length " +
                             std::to_string(worst.periods.size() - 1);
    result.certificate.reset();
  } else {
    result.decision.status = Status::kUndecided;
    result.decision.detail = "most negative cycle found lies within tolerance";
  }
  result.cycle = std::move(worst);
  return result;
}

bool verify_certificate(const MarketStatistics& stats,
                        const AfriatCertificate& cert, double tol) {
  const std::size_t T = stats.periods();
  if (static_cast<std::size_t>(cert.lambdas.size()) != T) return false;
  for (std::size_t t = 0; t < T; ++t) {
    if (!(cert.lambdas[t] > 0.0) || !std::isfinite(cert.lambdas[t])) return false;
  }
  if (std::abs(cert.lambdas.sum() - 1.0) > 1e-9) return false;
  for (std::size_t t = 0; t < T; ++t) {
    const double lhs = cert.lambdas[t] * stats.expenditure(t);
    for (std::size_t tau = 0; tau < T; ++tau) {
      if (tau == t) continue;
      if (lhs > cert.lambdas[tau] * stats.cost(tau, t) * (1.0 + tol)) return false;
    }
  }
  return true;
}

PiecewiseLinearUtility::PiecewiseLinearUtility(Vector weights, Matrix price_rows)
    : weights_(std::move(weights)), price_rows_(std::move(price_rows)) {
  if (weights_.size() == 0 || weights_.size() != price_rows_.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "one weight per price row required");
  }
}

double PiecewiseLinearUtility::operator()(const Vector& x) const {
  const std::size_t t = active_piece(x);
  return weights_[t] * price_rows_.row(t).dot(x);
}

std::size_t PiecewiseLinearUtility::active_piece(const Vector& x) const {
  if (x.size() != price_rows_.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "bundle dimension mismatch");
  }
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < weights_.size(); ++t) {
    const double value = weights_[t] * price_rows_.row(t).dot(x);
    if (value < best_value) {
      best_value = value;
      best = static_cast<std::size_t>(t);
    }
  }
  return best;
}

PiecewiseLinearUtility recover_utility(const AfriatCertificate& cert,
                                       const MarketStatistics& stats,
                                       double tol) {
  if (!verify_certificate(stats, cert, tol)) {
    throw Error(ErrorCode::kInvalidCertificate,
                "multipliers do not satisfy the Afriat inequalities");
  }
  return PiecewiseLinearUtility(cert.lambdas, stats.prices());
}

}  // namespace phrev
