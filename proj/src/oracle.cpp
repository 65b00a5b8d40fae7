#include "phrev/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace phrev {

namespace {

std::size_t resolution_for(const GridSpec& grid, std::size_t free_dims) {
  if (grid.resolution != 0) {
    if (grid.resolution < 2) throw Error(ErrorCode::kInvalidArgument, "grid resolution must be >= 2");
    return grid.resolution;
  }
  switch (free_dims) {
    case 0:
    case 1: return 10000;
    case 2: return 600;
    case 3: return 100;
    default: return 40;
  }
}

// Visits compositions of r into `parts` positive integers in lexicographic
// order until `visit` returns true.
bool for_each_composition(std::size_t r, std::size_t parts,
                          const std::function<bool(const std::vector<std::size_t>&)>& visit) {
  std::vector<std::size_t> k(parts, 1);
  std::function<bool(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t left) {
    if (pos + 1 == parts) {
      k[pos] = left;
      return visit(k);
    }
    for (std::size_t v = 1; v + (parts - pos - 1) <= left; ++v) {
      k[pos] = v;
      if (rec(pos + 1, left - v)) return true;
    }
    return false;
  };
  if (parts == 0 || r < parts) return false;
  return rec(0, r);
}

// Odometer over `dims` indices in [0, count); lexicographic order.
bool for_each_index(std::size_t dims, std::size_t count,
                    const std::function<bool(const std::vector<std::size_t>&)>& visit) {
  std::vector<std::size_t> j(dims, 0);
  for (;;) {
    if (visit(j)) return true;
    std::size_t d = dims;
    while (d > 0) {
      --d;
      if (++j[d] < count) break;
      j[d] = 0;
      if (d == 0) return false;
    }
    if (dims == 0) return false;
  }
}

double dot_row(const Matrix& a, std::size_t ra, const Matrix& b, std::size_t rb) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    s += a(static_cast<Eigen::Index>(ra), i) * b(static_cast<Eigen::Index>(rb), i);
  }
  return s;
}

// Smallest product over all 2- and 3-cycles of distinct periods.
double shortest_cycle_product(const Matrix& P, const Matrix& Q) {
  const std::size_t T = static_cast<std::size_t>(P.rows());
  auto edge = [&](std::size_t a, std::size_t b) {
    return dot_row(P, a, Q, b) / dot_row(P, b, Q, b);
  };
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < T; ++a) {
    for (std::size_t b = 0; b < T; ++b) {
      if (b == a) continue;
      best = std::min(best, edge(a, b) * edge(b, a));
      for (std::size_t c = 0; c < T; ++c) {
        if (c == a || c == b) continue;
        best = std::min(best, edge(a, b) * edge(b, c) * edge(c, a));
      }
    }
  }
  return best;
}

Decision decided(Status s, std::string detail) {
  Decision d;
  d.status = s;
  d.detail = std::move(detail);
  return d;
}

}  // namespace

OracleResult oracle_harp(const MarketStatistics& stats, const GridSpec& grid) {
  const std::size_t T = stats.periods();
  if (T > 4) throw Error(ErrorCode::kSizeLimit, "oracle_harp handles T <= 4");
  const Matrix& P = stats.prices();
  const Matrix& Q = stats.quantities();
  OracleResult out;
  const std::size_t r = resolution_for(grid, T - 1);
  Vector lam(static_cast<Eigen::Index>(T));
  const bool found = for_each_composition(r, T, [&](const std::vector<std::size_t>& k) {
    for (std::size_t t = 0; t < T; ++t) {
      lam[static_cast<Eigen::Index>(t)] = static_cast<double>(k[t]) / static_cast<double>(r);
    }
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t s = 0; s < T; ++s) {
        if (lam[static_cast<Eigen::Index>(t)] * dot_row(P, t, Q, t) >
            lam[static_cast<Eigen::Index>(s)] * dot_row(P, s, Q, t) * (1.0 + grid.tolerance)) {
          return false;
        }
      }
    }
    return true;
  });
  if (found) {
    out.decision = decided(Status::kFeasible, "grid point satisfies all inequalities");
    out.witness = lam;
    return out;
  }
  const double product = shortest_cycle_product(P, Q);
  if (product < 1.0 - 10.0 * grid.tolerance) {
    out.decision = decided(Status::kInfeasible, "short cycle with product " + std::to_string(product));
  } else {
    out.decision = decided(Status::kUndecided, "no grid point and no short-cycle certificate");
  }
  return out;
}

OracleResult oracle_separability(const PartitionedStatistics& part, const GridSpec& grid) {
  const std::size_t T = part.base().periods();
  if (T > 3) throw Error(ErrorCode::kSizeLimit, "oracle_separability handles T <= 3");
  const Matrix& p = part.q_data().prices();
  const Matrix& q = part.q_data().quantities();
  const Matrix& x = part.y_data().prices();
  const Matrix& y = part.y_data().quantities();
  OracleResult out;

  // With λ_1 = 1, the y-block inequalities confine each later λ_t to an
  // interval given the earlier ones; each interval is gridded including its
  // endpoints, so a degenerate (single-point) interval is still visited. For
  // fixed λ, (f2) bounds each ratio μ_t / μ_s by R(t, s); with T <= 3 every
  // cycle has length <= 3, so μ is feasible iff all 2- and 3-cycle products of
  // R are >= 1, and the largest solution with μ_1 = 1 is a shortest path of
  // length <= 2.
  const std::size_t r = resolution_for(grid, T - 1);
  Vector lam(static_cast<Eigen::Index>(T));
  Vector mu(static_cast<Eigen::Index>(T));
  Matrix R(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(T));
  auto f2_holds = [&]() {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t s = 0; s < T; ++s) {
        const double lt = lam[static_cast<Eigen::Index>(t)];
        const double ls = lam[static_cast<Eigen::Index>(s)];
        const double xy = dot_row(x, t, y, t);
        const double lhs = mu[static_cast<Eigen::Index>(t)] * ls * (dot_row(p, t, q, t) + xy);
        const double rhs = mu[static_cast<Eigen::Index>(s)] * (ls * dot_row(p, s, q, t) + lt * xy);
        if (lhs > rhs * (1.0 + grid.tolerance)) return false;
      }
    }
    return true;
  };
  auto mu_exists = [&]() {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t s = 0; s < T; ++s) {
        const double lt = lam[static_cast<Eigen::Index>(t)];
        const double ls = lam[static_cast<Eigen::Index>(s)];
        const double xy = dot_row(x, t, y, t);
        R(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) =
            (ls * dot_row(p, s, q, t) + lt * xy) / (ls * (dot_row(p, t, q, t) + xy));
      }
    }
    for (std::size_t a = 0; a < T; ++a) {
      for (std::size_t b = 0; b < T; ++b) {
        if (a == b) continue;
        if (R(a, b) * R(b, a) < 1.0) return false;
        for (std::size_t c = 0; c < T; ++c) {
          if (c != a && c != b && R(a, b) * R(b, c) * R(c, a) < 1.0) return false;
        }
      }
    }
    mu[0] = 1.0;
    for (std::size_t t = 1; t < T; ++t) {
      const auto ti = static_cast<Eigen::Index>(t);
      double best = R(ti, 0);
      for (Eigen::Index s = 1; s < static_cast<Eigen::Index>(T); ++s) {
        if (s != ti) best = std::min(best, R(ti, s) * R(s, 0));
      }
      mu[ti] = best;
    }
    return f2_holds();
  };
  // c(s, t) = x^s·y^t / x^t·y^t bounds λ_t / λ_s from above.
  auto c = [&](std::size_t s, std::size_t t) { return dot_row(x, s, y, t) / dot_row(x, t, y, t); };
  auto y_harp_holds = [&]() {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t s = 0; s < T; ++s) {
        if (lam[static_cast<Eigen::Index>(t)] * dot_row(x, t, y, t) >
            lam[static_cast<Eigen::Index>(s)] * dot_row(x, s, y, t) * (1.0 + grid.tolerance)) {
          return false;
        }
      }
    }
    return true;
  };
  // Visits λ_t on its interval for t = depth, ..., T - 1.
  std::function<bool(std::size_t)> visit = [&](std::size_t depth) {
    if (depth == T) return y_harp_holds() && mu_exists();
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < depth; ++s) {
      const double ls = lam[static_cast<Eigen::Index>(s)];
      lo = std::max(lo, ls / c(depth, s));
      hi = std::min(hi, ls * c(s, depth));
    }
    if (lo > hi * (1.0 + grid.tolerance)) return false;
    hi = std::max(hi, lo);
    for (std::size_t j = 0; j <= r; ++j) {
      const double w = static_cast<double>(j) / static_cast<double>(r);
      lam[static_cast<Eigen::Index>(depth)] = lo + (hi - lo) * w;
      if (visit(depth + 1)) return true;
      if (hi == lo) break;
    }
    return false;
  };
  lam[0] = 1.0;
  const bool found = visit(1);
  if (found) {
    out.decision = decided(Status::kFeasible, "grid point satisfies all inequalities");
    Vector w(2 * static_cast<Eigen::Index>(T));
    w << lam / lam.sum(), mu / mu.maxCoeff();
    out.witness = w;
    return out;
  }
  const double y_product = shortest_cycle_product(x, y);
  const double full_product =
      shortest_cycle_product(part.base().prices(), part.base().quantities());
  if (std::min(y_product, full_product) < 1.0 - 10.0 * grid.tolerance) {
    out.decision = decided(Status::kInfeasible,
                           "short cycle with product " + std::to_string(std::min(y_product, full_product)));
  } else {
    out.decision = decided(Status::kUndecided, "no grid point and no short-cycle certificate");
  }
  return out;
}

OracleResult oracle_collective(const MarketStatistics& stats, std::size_t k, const GridSpec& grid) {
  const std::size_t T = stats.periods();
  const std::size_t n = stats.goods();
  if (T > 2 || n > 2 || k > 2 || k < 1) {
    throw Error(ErrorCode::kSizeLimit, "oracle_collective handles T, n <= 2 and k in {1, 2}");
  }
  if (k == 1) return oracle_harp(stats, grid);

  const Matrix& P = stats.prices();
  const Matrix& Q = stats.quantities();
  const std::size_t dims = T * n;
  const std::size_t r = resolution_for(grid, dims);
  Matrix q1(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(n));
  Matrix q2(q1.rows(), q1.cols());
  auto passes = [&](const Matrix& qa) {
    if (T < 2) return true;
    const double product = (dot_row(P, 0, qa, 1) / dot_row(P, 1, qa, 1)) *
                           (dot_row(P, 1, qa, 0) / dot_row(P, 0, qa, 0));
    return product >= 1.0 - grid.tolerance;
  };
  Vector fractions(static_cast<Eigen::Index>(dims));
  OracleResult out;
  const bool found = for_each_index(dims, r - 1, [&](const std::vector<std::size_t>& j) {
    for (std::size_t d = 0; d < dims; ++d) {
      const double f = static_cast<double>(j[d] + 1) / static_cast<double>(r);
      fractions[static_cast<Eigen::Index>(d)] = f;
      const Eigen::Index t = static_cast<Eigen::Index>(d / n);
      const Eigen::Index i = static_cast<Eigen::Index>(d % n);
      q1(t, i) = f * Q(t, i);
      q2(t, i) = (1.0 - f) * Q(t, i);
    }
    return passes(q1) && passes(q2);
  });
  if (found) {
    out.decision = decided(Status::kFeasible, "grid split rationalizes both consumers");
    out.witness = fractions;
  } else {
    out.decision = decided(Status::kUndecided, "no grid split passes");
  }
  return out;
}

}  // namespace phrev
