#pragma once

#include <json.hpp>

#include "phrev/collective.hpp"
#include "phrev/harp.hpp"
#include "phrev/separability.hpp"

namespace phrev {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

/// Non-finite values become null.
Json number_or_null(double v);
Json vector_json(const Vector& v);
Json matrix_json(const Matrix& m);

/// Periods are written 1-based.
Json cycle_json(const ViolationCycle& cycle);
Json allocation_json(const AllocationSolution& alloc);

std::string separability_status(Status s);   // SEPARABLE / NOT_SEPARABLE / UNDECIDED
std::string class_number_status(ClassNumberOutcome o);  // FOUND / LOWER_BOUND_ONLY / NOT_FOUND

/// Command-specific report bodies: status, optimum and the certificate or
/// witness fields.
Json harp_body(const HarpResult& r);
Json separability_body(const SeparabilityResult& r);
Json collective_body(const CollectiveResult& r, std::size_t k);
Json class_number_body(const ClassNumberResult& r);

}  // namespace phrev
