#pragma once

#include "phrev/model.hpp"

namespace phrev::detail {

struct LpSolution {
  double value = 0.0;
  Vector primal;  // s
  Vector dual;    // y ≥ 0 with Aᵀy ≥ c and bᵀy = value
};

/// maximize cᵀs subject to A s ≤ b, s ≥ 0, for b ≥ 0 (the origin is a vertex).
/// Dense tableau with Bland's rule; throws kInvalidArgument if b has a
/// negative entry and kDomainViolation if the problem is unbounded.
LpSolution maximize_packing(const Matrix& A, const Vector& b, const Vector& c);

}  // namespace phrev::detail
