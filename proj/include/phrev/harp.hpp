#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "phrev/model.hpp"

namespace phrev {

/// Complete digraph over periods in log form. Edge `from -> to` carries
/// log(p^from · q^to) - log(p^to · q^to); self-loops are zero.
class CrossGraph {
 public:
  explicit CrossGraph(Matrix weights) : weights_(std::move(weights)) {}

  std::size_t nodes() const { return static_cast<std::size_t>(weights_.rows()); }
  double weight(std::size_t from, std::size_t to) const { return weights_(from, to); }
  const Matrix& weights() const { return weights_; }

 private:
  Matrix weights_;
};

CrossGraph build_cross_graph(const MarketStatistics& stats);

/// Result of a difference-constraint system x_to - x_from <= bound(from, to).
/// Exactly one of `potentials` / `cycle` is set. The cycle lists distinct
/// nodes in traversal order; the closing edge back to the front is implied.
struct DifferenceSolution {
  std::optional<Vector> potentials;
  std::vector<std::size_t> cycle;
};

/// Label-correcting sweep from a virtual zero source. Edges are relaxed in
/// (from, to) lexicographic order and only on strict improvement, so the
/// output is deterministic. Diagonal entries are ignored.
DifferenceSolution solve_difference_constraints(const Matrix& bound);

/// Positive multipliers solving the homogeneous Afriat inequalities,
/// normalized to sum to one.
struct AfriatCertificate {
  Vector lambdas;
};

/// Cycle of periods whose cross-expenditure product is below one. `periods`
/// is closed: front() == back().
struct ViolationCycle {
  std::vector<std::size_t> periods;
  double log_weight = 0.0;
  double cycle_ratio = 1.0;
};

struct HarpResult {
  Decision decision;
  std::optional<AfriatCertificate> certificate;
  std::optional<ViolationCycle> cycle;
};

inline constexpr double kDefaultHarpTolerance = 1e-9;

/// Exact PH-rationalizability test. FEASIBLE comes with a certificate,
/// INFEASIBLE with a cycle of ratio < 1 - tol. A cycle whose log weight lies in
/// [-tol, 0) gives UNDECIDED; the certificate then holds only up to the
/// tolerance and is attached for inspection.
HarpResult check_harp(const MarketStatistics& stats,
                      double tol = kDefaultHarpTolerance);

/// Product over the closed cycle of (p^{t_i}·q^{t_{i+1}}) / (p^{t_{i+1}}·q^{t_{i+1}}).
double cycle_ratio(const MarketStatistics& stats,
                   const std::vector<std::size_t>& closed_periods);

/// All T² inequalities λ_t p^t q^t <= λ_τ p^τ q^t (1 + tol), positivity, and
/// Σλ = 1 within 1e-9.
bool verify_certificate(const MarketStatistics& stats,
                        const AfriatCertificate& cert,
                        double tol = kDefaultHarpTolerance);

/// f(x) = min_t weight_t · (row_t · x): positively homogeneous, concave and
/// nondecreasing.
class PiecewiseLinearUtility {
 public:
  PiecewiseLinearUtility(Vector weights, Matrix price_rows);

  double operator()(const Vector& x) const;
  /// Index of the minimizing piece (lowest index on ties).
  std::size_t active_piece(const Vector& x) const;

  std::size_t pieces() const { return static_cast<std::size_t>(weights_.size()); }
  std::size_t dimension() const { return static_cast<std::size_t>(price_rows_.cols()); }
  const Vector& weights() const { return weights_; }
  const Matrix& price_rows() const { return price_rows_; }

 private:
  Vector weights_;
  Matrix price_rows_;
};

/// f(x) = min_t λ_t p^t·x. Throws kInvalidCertificate when the certificate does
/// not verify at `tol`.
PiecewiseLinearUtility recover_utility(const AfriatCertificate& cert,
                                       const MarketStatistics& stats,
                                       double tol = kDefaultHarpTolerance);

}  // namespace phrev
