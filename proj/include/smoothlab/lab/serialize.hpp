#pragma once

#include "smoothlab/lab/report.hpp"
#include "smoothlab/perceptron.hpp"
#include "smoothlab/simplex_shadow.hpp"

namespace smoothlab::lab {

inline Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

/// {status, pivot_count, lambda_breakpoints, visited_tight_sets}
inline Json trace_to_json(const PivotTrace& trace) {
  Json o = Json::object();
  o["status"] = std::string(to_string(trace.outcome));
  o["pivot_count"] = trace.pivot_count;
  Json lambdas = Json::array();
  for (double l : trace.lambda_breakpoints) lambdas.push_back(num(l));
  o["lambda_breakpoints"] = std::move(lambdas);
  Json sets = Json::array();
  for (const auto& v : trace.visited) sets.push_back(v.tight_set);
  o["visited_tight_sets"] = std::move(sets);
  return o;
}

inline Json solve_result_to_json(const SolveResult& r) {
  Json o = Json::object();
  o["status"] = std::string(to_string(r.status));
  o["value"] = r.status == LpStatus::optimal ? num(r.value) : Json(nullptr);
  o["point"] = r.point ? vector_json(*r.point) : Json(nullptr);
  o["ray"] = r.ray ? vector_json(*r.ray) : Json(nullptr);
  o["start_objective"] = r.start_objective ? vector_json(*r.start_objective) : Json(nullptr);
  o["degenerate"] = r.trace.degenerate;
  o["trace"] = trace_to_json(r.trace);
  return o;
}

inline Json perceptron_run_to_json(const PerceptronRun& run, const Margin& margin) {
  Json o = Json::object();
  o["status"] = std::string(to_string(run.status));
  o["iterations"] = run.iterations;
  o["final_x"] = run.final_x ? vector_json(*run.final_x) : Json(nullptr);
  o["feasible"] = margin.feasible;
  o["nu"] = num(margin.nu);
  o["iteration_bound"] = margin.feasible ? Json(iteration_bound(margin.nu)) : Json(nullptr);
  return o;
}

}  // namespace smoothlab::lab
