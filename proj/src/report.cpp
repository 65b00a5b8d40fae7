#include "phrev/report.hpp"

#include <cmath>

namespace phrev {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v[i]));
  return a;
}

Json matrix_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vector_json(m.row(r).transpose()));
  return a;
}

Json cycle_json(const ViolationCycle& cycle) {
  Json periods = Json::array();
  for (std::size_t p : cycle.periods) periods.push_back(p + 1);
  return Json{{"periods", periods},
              {"log_weight", number_or_null(cycle.log_weight)},
              {"cycle_ratio", number_or_null(cycle.cycle_ratio)}};
}

Json allocation_json(const AllocationSolution& alloc) {
  Json subs = Json::array();
  for (const Matrix& q : alloc.sub_quantities) subs.push_back(matrix_json(q));
  const double residual_max = alloc.residuals.size() ? alloc.residuals.cwiseAbs().maxCoeff() : 0.0;
  return Json{{"k", alloc.k},
              {"sub_quantities", subs},
              {"sub_lambdas", matrix_json(alloc.sub_lambdas)},
              {"residual_max", number_or_null(residual_max)}};
}

std::string separability_status(Status s) {
  switch (s) {
    case Status::kFeasible: return "SEPARABLE";
    case Status::kInfeasible: return "NOT_SEPARABLE";
    case Status::kUndecided: return "UNDECIDED";
  }
  return "UNDECIDED";
}

std::string class_number_status(ClassNumberOutcome o) {
  switch (o) {
    case ClassNumberOutcome::kFound: return "FOUND";
    case ClassNumberOutcome::kLowerBoundOnly: return "LOWER_BOUND_ONLY";
    case ClassNumberOutcome::kNotFound: return "NOT_FOUND";
  }
  return "NOT_FOUND";
}

namespace {

Json optimum_json(const Decision& d) {
  return d.optimum ? number_or_null(*d.optimum) : Json(nullptr);
}

}  // namespace

Json harp_body(const HarpResult& r) {
  Json j{{"status", to_string(r.decision.status)},
         {"optimum", optimum_json(r.decision)},
         {"detail", r.decision.detail}};
  if (r.certificate) j["certificate"] = Json{{"lambdas", vector_json(r.certificate->lambdas)}};
  if (r.cycle) j["cycle"] = cycle_json(*r.cycle);
  return j;
}

Json separability_body(const SeparabilityResult& r) {
  Json j{{"status", separability_status(r.decision.status)},
         {"optimum", optimum_json(r.decision)},
         {"detail", r.decision.detail},
         {"lower_bound", number_or_null(r.lower_bound)},
         {"violated_constraints", r.violations}};
  if (r.decision.status == Status::kFeasible) {
    j["certificate"] = Json{{"lambdas", vector_json(r.lambdas)}, {"mus", vector_json(r.mus)}};
  }
  if (r.cycle) j["cycle"] = cycle_json(*r.cycle);
  return j;
}

Json collective_body(const CollectiveResult& r, std::size_t k) {
  Json j{{"k", k},
         {"status", to_string(r.decision.status)},
         {"optimum", optimum_json(r.decision)},
         {"detail", r.decision.detail},
         {"lower_bound", number_or_null(r.lower_bound)}};
  if (r.allocation) j["witness"] = allocation_json(*r.allocation);
  return j;
}

Json class_number_body(const ClassNumberResult& r) {
  Json per_k = Json::array();
  for (const auto& [k, d] : r.per_k) {
    per_k.push_back(Json{{"k", k},
                         {"status", to_string(d.status)},
                         {"optimum", optimum_json(d)},
                         {"detail", d.detail}});
  }
  Json j{{"status", class_number_status(r.outcome)},
         {"value", r.value ? Json(*r.value) : Json(nullptr)},
         {"lower_bound", r.lower_bound},
         {"per_k", per_k}};
  if (r.witness) j["witness"] = allocation_json(*r.witness);
  return j;
}

}  // namespace phrev
