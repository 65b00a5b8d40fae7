#include "simplex.hpp"

#include <cmath>
#include <limits>

namespace phrev::detail {

LpSolution maximize_packing(const Matrix& A, const Vector& b, const Vector& c) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  if (b.size() != m || c.size() != n) {
    throw Error(ErrorCode::kShapeMismatch, "packing LP dimensions disagree");
  }
  if ((b.array() < 0.0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "packing LP needs b >= 0");
  }
  // Tableau rows 0..m-1 are constraints, row m is the reduced-cost row.
  // Columns 0..n-1 structural, n..n+m-1 slack, n+m the right-hand side.
  Matrix tab = Matrix::Zero(m + 1, n + m + 1);
  tab.topLeftCorner(m, n) = A;
  tab.block(0, n, m, m).setIdentity();
  tab.col(n + m).head(m) = b;
  tab.row(m).head(n) = -c.transpose();
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

  constexpr double kPivotTol = 1e-12;
  const Eigen::Index rhs = n + m;
  for (int guard = 0; guard < 100000; ++guard) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < n + m; ++j) {
      if (tab(m, j) < -kPivotTol) {
        enter = j;  // Bland: lowest index with negative reduced cost
        break;
      }
    }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (tab(i, enter) > kPivotTol) {
        const double ratio = tab(i, rhs) / tab(i, enter);
        if (ratio < best - 1e-15 ||
            (std::abs(ratio - best) <= 1e-15 && leave >= 0 &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) throw Error(ErrorCode::kDomainViolation, "packing LP is unbounded");
    tab.row(leave) /= tab(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (i != leave && tab(i, enter) != 0.0) tab.row(i) -= tab(i, enter) * tab.row(leave);
    }
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  LpSolution out;
  out.value = tab(m, rhs);
  out.primal = Vector::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index v = basis[static_cast<std::size_t>(i)];
    if (v < n) out.primal[v] = tab(i, rhs);
  }
  out.dual = tab.row(m).segment(n, m).transpose();
  return out;
}

}  // namespace phrev::detail
