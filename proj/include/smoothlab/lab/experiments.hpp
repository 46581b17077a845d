#pragma once

// Monte Carlo experiments. Each one has a typed per-trial record, a trial
// function that depends only on (config, trial index), and an aggregate step
// that turns the records into a report. Replay runs the same aggregate step
// on records read back from a report, so anything a report states can be
// recomputed from its per-trial section.
//
// Trial i always draws from stream (master_seed, i); within a trial every
// sigma (and every center) restarts that stream, so the grid is evaluated
// with common random numbers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "smoothlab/combinatorics.hpp"
#include "smoothlab/lab/config.hpp"
#include "smoothlab/lab/parallel.hpp"
#include "smoothlab/lab/report.hpp"
#include "smoothlab/numkit.hpp"
#include "smoothlab/perceptron.hpp"
#include "smoothlab/perturb.hpp"
#include "smoothlab/polytope_lp.hpp"
#include "smoothlab/simplex_shadow.hpp"

namespace smoothlab::lab {

inline std::string schema_id(ExperimentKind k) { return "smoothlab." + std::string(to_string(k)) + ".v1"; }

// ---------------------------------------------------------------------------
// Configuration echo

inline Json config_echo(const ExperimentConfig& cfg) {
  Json o = Json::object();
  o["kind"] = std::string(to_string(cfg.kind));
  o["n"] = cfg.n;
  o["d"] = cfg.d;
  Json s = Json::array();
  for (double x : cfg.sigma_grid) s.push_back(num(x));
  o["sigma"] = std::move(s);
  Json t = Json::array();
  for (double x : cfg.thresholds) t.push_back(num(x));
  o["threshold"] = std::move(t);
  o["trials"] = cfg.trials;
  o["seed"] = cfg.master_seed;
  o["center"] = cfg.centers;
  o["rule"] = std::string(to_string(cfg.rule));
  o["exhaustive"] = cfg.exhaustive;
  o["cap"] = cfg.iteration_cap;
  o["measure"] = std::string(to_string(cfg.measure));
  o["per_trial"] = cfg.per_trial;
  return o;
}

inline ExperimentConfig config_from_echo(const Json& o) {
  try {
    ExperimentConfig cfg;
    cfg.kind = parse_kind(o.at("kind").get<std::string>());
    cfg.n = o.at("n").get<std::size_t>();
    cfg.d = o.at("d").get<std::size_t>();
    cfg.sigma_grid.clear();
    for (const auto& x : o.at("sigma")) cfg.sigma_grid.push_back(from_num(x));
    cfg.thresholds.clear();
    for (const auto& x : o.at("threshold")) cfg.thresholds.push_back(from_num(x));
    cfg.trials = o.at("trials").get<std::size_t>();
    cfg.master_seed = o.at("seed").get<std::uint64_t>();
    cfg.centers = o.at("center").get<std::vector<std::string>>();
    const std::string rule = o.at("rule").get<std::string>();
    for (auto r : {SelectionRule::lowest_index, SelectionRule::most_violated, SelectionRule::random_violated})
      if (to_string(r) == rule) cfg.rule = r;
    cfg.exhaustive = o.at("exhaustive").get<bool>();
    cfg.iteration_cap = o.at("cap").get<std::uint64_t>();
    cfg.measure = parse_measure(o.at("measure").get<std::string>());
    cfg.per_trial = o.at("per_trial").get<bool>();
    return cfg;
  } catch (const Json::exception& e) {
    fail(ErrorKind::invalid_input, std::string("malformed config echo: ") + e.what());
  }
}

namespace detail {

inline Report start_report(const ExperimentConfig& cfg, std::vector<std::string> warnings) {
  Report r;
  r.schema = schema_id(cfg.kind);
  r.config = config_echo(cfg);
  r.main.name = "rows";
  r.warnings = std::move(warnings);
  return r;
}

template <class Record>
void attach_per_trial(Report& r, const ExperimentConfig& cfg, const std::vector<Record>& records) {
  if (!cfg.per_trial) return;
  Json arr = Json::array();
  for (const auto& rec : records) arr.push_back(rec.to_json());
  r.per_trial = std::move(arr);
}

template <class Record>
std::vector<Record> records_from_json(const Json& arr) {
  std::vector<Record> out;
  try {
    for (const auto& j : arr) out.push_back(Record::from_json(j));
  } catch (const Json::exception& e) {
    fail(ErrorKind::invalid_input, std::string("malformed per-trial record: ") + e.what());
  }
  return out;
}

inline Json where(double sigma, double threshold) {
  Json w = Json::object();
  w["sigma"] = num(sigma);
  w["threshold"] = num(threshold);
  return w;
}

inline Json where_sigma(double sigma) {
  Json w = Json::object();
  w["sigma"] = num(sigma);
  return w;
}

inline Json optional_num(double x) { return std::isnan(x) ? Json(nullptr) : num(x); }

inline double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Standard error of the mean (sample standard deviation / sqrt(k)).
inline double mean_stderr(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

inline double median_of(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

/// Warnings that depend only on the centers and sigma grid.
inline std::vector<std::string> point_warnings(const std::vector<Vector>& centers, const std::vector<double>& sigmas,
                                               bool regime) {
  std::vector<std::string> w;
  for (std::size_t i = 0; i < centers.size(); ++i)
    if (norm(centers[i]) > 1.0 + 1e-12) w.push_back("center " + std::to_string(i) + " has norm above 1");
  if (regime && !centers.empty())
    for (double s : sigmas)
      if (!in_shadow_regime(s, centers.size(), centers.front().dim()))
        w.push_back("sigma=" + format_double(s) + ": sigma^2 exceeds 1/(9 d log n)");
  return w;
}

inline std::vector<double> json_doubles(const Json& arr) {
  std::vector<double> out;
  for (const auto& x : arr) out.push_back(from_num(x));
  return out;
}

inline Json doubles_json(const std::vector<double>& xs) {
  Json a = Json::array();
  for (double x : xs) a.push_back(num(x));
  return a;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Gaussian matrix tails

struct MatrixTailTrial {
  std::size_t trial = 0;
  std::vector<double> inverse_norm;  // one per sigma

  Json to_json() const { return Json{{"trial", trial}, {"inverse_norm", detail::doubles_json(inverse_norm)}}; }
  static MatrixTailTrial from_json(const Json& j) {
    return {j.at("trial").get<std::size_t>(), detail::json_doubles(j.at("inverse_norm"))};
  }
};

inline MatrixTailTrial matrix_tail_trial(const ExperimentConfig& cfg, const Matrix& center, std::size_t i) {
  MatrixTailTrial r{i, {}};
  for (double s : cfg.sigma_grid)
    r.inverse_norm.push_back(inverse_norm(gaussian_matrix(center, s, SeedSpec{cfg.master_seed, i})));
  return r;
}

inline Report aggregate_matrix_tail(const ExperimentConfig& cfg, const std::vector<MatrixTailTrial>& recs,
                                    std::vector<std::string> warnings) {
  Report r = detail::start_report(cfg, std::move(warnings));
  r.main.columns = {"sigma", "threshold", "empirical", "stderr", "bound_edelman", "bound_sst", "bound_thm43", "bound_conj1"};
  const double d = static_cast<double>(cfg.d);
  const double sd = std::sqrt(d);
  const bool gaussian_core = cfg.centers.front() == "zero";
  for (std::size_t s = 0; s < cfg.sigma_grid.size(); ++s) {
    const double sigma = cfg.sigma_grid[s];
    for (double t : cfg.thresholds) {
      std::size_t over = 0;
      for (const auto& rec : recs) over += rec.inverse_norm.at(s) > t;
      const double p = static_cast<double>(over) / static_cast<double>(recs.size());
      const double se = binomial_stderr(p, recs.size());
      const double edelman =
          gaussian_core && sigma == 1.0 ? sd / t : std::numeric_limits<double>::quiet_NaN();
      const double sst = 1.823 * sd / (t * sigma);
      const double thm43 = d * sd / (t * sigma);
      const double conj1 = sd / (t * sigma);
      r.main.add({num(sigma), num(t), num(p), num(se), detail::optional_num(edelman), num(sst), num(thm43),
                  num(conj1)});
      const std::pair<const char*, double> bounds[] = {
          {"bound_edelman", edelman}, {"bound_sst", sst}, {"bound_thm43", thm43}, {"bound_conj1", conj1}};
      for (const auto& [name, value] : bounds)
        r.checks.push_back({name, detail::where(sigma, t), p, se, value, bound_status(p, se, value),
                            std::string(name) == "bound_conj1"});
    }
  }
  r.meta["trials"] = recs.size();
  r.meta["conjectural_bounds"] = {"bound_conj1"};
  r.meta["bound_edelman_scope"] = "zero center, sigma = 1";
  detail::attach_per_trial(r, cfg, recs);
  return r;
}

inline Report run_matrix_tail(ExperimentConfig cfg) {
  cfg.kind = ExperimentKind::matrix_tail;
  resolve_and_validate(cfg);
  const Matrix center = matrix_center(cfg.centers.front(), cfg.d);
  auto recs = parallel_map(cfg.trials, cfg.threads, [&](std::size_t i) { return matrix_tail_trial(cfg, center, i); });
  return aggregate_matrix_tail(cfg, recs, {});
}

// ---------------------------------------------------------------------------
// Sign-matrix tails

struct RademacherTrial {
  std::size_t trial = 0;
  double inverse_norm = 0.0;
  bool singular = false;

  Json to_json() const { return Json{{"trial", trial}, {"inverse_norm", num(inverse_norm)}, {"singular", singular}}; }
  static RademacherTrial from_json(const Json& j) {
    return {j.at("trial").get<std::size_t>(), from_num(j.at("inverse_norm")), j.at("singular").get<bool>()};
  }
};

/// Matrix number `index` in the exhaustive order: bit k of the index set
/// means entry k (row-major) is +1.
inline Matrix sign_matrix_from_index(std::size_t d, std::uint64_t index) {
  std::vector<double> e(d * d);
  for (std::size_t k = 0; k < d * d; ++k) e[k] = (index >> k) & 1u ? 1.0 : -1.0;
  return Matrix(d, d, std::move(e));
}

inline std::size_t rademacher_sample_count(const ExperimentConfig& cfg) {
  return cfg.exhaustive ? std::size_t{1} << (cfg.d * cfg.d) : cfg.trials;
}

inline RademacherTrial rademacher_trial(const ExperimentConfig& cfg, std::size_t i) {
  const Matrix a = cfg.exhaustive ? sign_matrix_from_index(cfg.d, i)
                                  : rademacher_matrix(cfg.d, SeedSpec{cfg.master_seed, i});
  const auto exact = exactly_singular_integer(a);
  const double inv = inverse_norm(a);
  return {i, inv, exact ? *exact : std::isinf(inv)};
}

inline Report aggregate_rademacher_tail(const ExperimentConfig& cfg, const std::vector<RademacherTrial>& recs,
                                        std::vector<std::string> warnings) {
  Report r = detail::start_report(cfg, std::move(warnings));
  r.main.columns = {"d", "threshold", "empirical", "stderr", "singular_frequency", "bound_conj2_sqrt_term", "mode"};
  const std::size_t count = recs.size();
  std::size_t singular = 0;
  for (const auto& rec : recs) singular += rec.singular;
  const double sing_freq = static_cast<double>(singular) / static_cast<double>(count);
  const std::string mode = cfg.exhaustive ? "exhaustive" : "sampled";
  for (double t : cfg.thresholds) {
    std::size_t over = 0;
    for (const auto& rec : recs) over += rec.inverse_norm > t;
    const double p = static_cast<double>(over) / static_cast<double>(count);
    const double se = binomial_stderr(p, count);
    const double term = std::sqrt(static_cast<double>(cfg.d)) / t;
    r.main.add({cfg.d, num(t), num(p), num(se), num(sing_freq), num(term), mode});
    Json w = Json::object();
    w["d"] = cfg.d;
    w["threshold"] = num(t);
    r.checks.push_back({"bound_conj2_sqrt_term", std::move(w), p, se, term, bound_status(p, se, term), true});
  }
  r.meta["samples"] = count;
  r.meta["singular_count"] = singular;
  r.meta["singular_frequency"] = num(sing_freq);
  r.meta["mode"] = mode;
  r.meta["conjectural_bounds"] = {"bound_conj2_sqrt_term"};
  r.meta["bound_conj2_note"] = "sqrt(d)/t term only; the alpha^n term has an unspecified constant";
  detail::attach_per_trial(r, cfg, recs);
  return r;
}

inline Report run_rademacher_tail(ExperimentConfig cfg) {
  cfg.kind = ExperimentKind::rademacher_tail;
  resolve_and_validate(cfg);
  auto recs = parallel_map(rademacher_sample_count(cfg), cfg.threads,
                           [&](std::size_t i) { return rademacher_trial(cfg, i); });
  return aggregate_rademacher_tail(cfg, recs, {});
}

// ---------------------------------------------------------------------------
// Shadow size

struct ShadowSample {
  std::string status;  // bounded, unbounded or empty
  std::size_t vertices = 0;
  std::size_t polytope_vertices = 0;
  std::size_t collisions = 0;
};

struct ShadowTrial {
  std::size_t trial = 0;
  std::vector<ShadowSample> samples;  // one per sigma

  Json to_json() const {
    Json arr = Json::array();
    for (const auto& s : samples)
      arr.push_back(Json{{"status", s.status},
                         {"vertices", s.vertices},
                         {"polytope_vertices", s.polytope_vertices},
                         {"collisions", s.collisions}});
    return Json{{"trial", trial}, {"samples", std::move(arr)}};
  }
  static ShadowTrial from_json(const Json& j) {
    ShadowTrial t{j.at("trial").get<std::size_t>(), {}};
    for (const auto& s : j.at("samples"))
      t.samples.push_back({s.at("status").get<std::string>(), s.at("vertices").get<std::size_t>(),
                           s.at("polytope_vertices").get<std::size_t>(), s.at("collisions").get<std::size_t>()});
    return t;
  }
};

inline ShadowTrial shadow_trial(const ExperimentConfig& cfg, const std::vector<Vector>& centers, std::size_t i) {
  ShadowTrial out{i, {}};
  for (double sigma : cfg.sigma_grid) {
    RandomStream stream(SeedSpec{cfg.master_seed, i});
    auto pts = gaussian_points(centers, sigma, stream).points;
    const Vector t(stream.gaussian_vector(cfg.d));
    const Vector z(stream.gaussian_vector(cfg.d));
    ShadowSample s;
    try {
      const ShadowPolygon poly = shadow_polygon(LinearProgram::unit_rhs(std::move(pts), z), t, z);
      s.vertices = poly.vertex_count();
      s.polytope_vertices = poly.polytope_vertex_count;
      s.collisions = poly.projection_collisions;
      s.status = poly.vertex_count() == 0 ? "empty" : "bounded";
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::unbounded_shadow) throw;
      s.status = "unbounded";
    }
    out.samples.push_back(std::move(s));
  }
  return out;
}

inline Report aggregate_shadow_size(const ExperimentConfig& cfg, const std::vector<ShadowTrial>& recs,
                                    std::vector<std::string> warnings) {
  Report r = detail::start_report(cfg, std::move(warnings));
  r.main.columns = {"sigma",        "trials",       "bounded",      "unbounded", "empty", "mean_vertices",
                    "max_vertices", "min_vertices", "below_three",  "bound_eq2"};
  for (std::size_t s = 0; s < cfg.sigma_grid.size(); ++s) {
    const double sigma = cfg.sigma_grid[s];
    std::size_t unbounded = 0, empty = 0, below_three = 0;
    std::vector<double> counts;
    for (const auto& rec : recs) {
      const ShadowSample& x = rec.samples.at(s);
      if (x.status == "unbounded") {
        ++unbounded;
      } else if (x.status == "empty") {
        ++empty;
      } else {
        counts.push_back(static_cast<double>(x.vertices));
        below_three += x.vertices < 3;
      }
    }
    const double bound = shadow_size_bound(cfg.n, cfg.d, sigma);
    const double mean = detail::mean_of(counts);
    const double mx = counts.empty() ? std::numeric_limits<double>::quiet_NaN()
                                     : *std::max_element(counts.begin(), counts.end());
    const double mn = counts.empty() ? std::numeric_limits<double>::quiet_NaN()
                                     : *std::min_element(counts.begin(), counts.end());
    r.main.add({num(sigma), recs.size(), counts.size(), unbounded, empty, detail::optional_num(mean),
                detail::optional_num(mx), detail::optional_num(mn), below_three, num(bound)});
    Check c{"bound_eq2", detail::where_sigma(sigma), mean, detail::mean_stderr(counts), bound, "", false};
    c.status = counts.empty() ? "not_applicable" : (mean <= bound ? "respected" : "violated");
    r.checks.push_back(std::move(c));
  }
  r.meta["statistic"] = "vertex count of the projection onto span(t, z), bounded shadows only";
  detail::attach_per_trial(r, cfg, recs);
  return r;
}

inline Report run_shadow_size(ExperimentConfig cfg) {
  cfg.kind = ExperimentKind::shadow_size;
  resolve_and_validate(cfg);
  for (double s : cfg.sigma_grid) shadow_size_bound(cfg.n, cfg.d, s);
  check_subset_budget(cfg.n, cfg.d, kDefaultSubsetBudget);
  const auto centers = point_centers(cfg.centers.front(), cfg.n, cfg.d);
  auto recs = parallel_map(cfg.trials, cfg.threads, [&](std::size_t i) { return shadow_trial(cfg, centers, i); });
  return aggregate_shadow_size(cfg, recs, detail::point_warnings(centers, cfg.sigma_grid, true));
}

// ---------------------------------------------------------------------------
// Simplex pivots

struct PivotSample {
  std::string status;         // solver status
  std::string oracle_status;  // brute-force status
  bool phase2 = false;
  std::size_t pivots = 0;
  double value = 0.0;
  double oracle_value = 0.0;
  bool agrees = false;
  // Shadow of the realized plane; -1 when not applicable.
  std::int64_t shadow_vertices = -1;
  bool on_shadow = false;

  Json to_json() const {
    return Json{{"status", status},       {"oracle_status", oracle_status}, {"phase2", phase2},
                {"pivots", pivots},       {"value", num(value)},           {"oracle_value", num(oracle_value)},
                {"agrees", agrees},       {"shadow_vertices", shadow_vertices}, {"on_shadow", on_shadow}};
  }
  static PivotSample from_json(const Json& j) {
    PivotSample s;
    s.status = j.at("status").get<std::string>();
    s.oracle_status = j.at("oracle_status").get<std::string>();
    s.phase2 = j.at("phase2").get<bool>();
    s.pivots = j.at("pivots").get<std::size_t>();
    s.value = from_num(j.at("value"));
    s.oracle_value = from_num(j.at("oracle_value"));
    s.agrees = j.at("agrees").get<bool>();
    s.shadow_vertices = j.at("shadow_vertices").get<std::int64_t>();
    s.on_shadow = j.at("on_shadow").get<bool>();
    return s;
  }
};

struct PivotTrial {
  std::size_t trial = 0;
  std::vector<PivotSample> samples;  // one per sigma

  Json to_json() const {
    Json arr = Json::array();
    for (const auto& s : samples) arr.push_back(s.to_json());
    return Json{{"trial", trial}, {"samples", std::move(arr)}};
  }
  static PivotTrial from_json(const Json& j) {
    PivotTrial t{j.at("trial").get<std::size_t>(), {}};
    for (const auto& s : j.at("samples")) t.samples.push_back(PivotSample::from_json(s));
    return t;
  }
};

/// Solves `lp` with the shadow-vertex method, checks it against the
/// brute-force oracle and, for optimal runs, against the shadow polygon of
/// the plane the walk actually used.
inline PivotSample measure_pivots(const LinearProgram& lp) {
  PivotSample s;
  const SolveResult res = solve(lp);
  const LpOutcome oracle = brute_force_optimum(lp);
  s.status = std::string(to_string(res.status));
  s.oracle_status = std::string(to_string(oracle.status));
  s.phase2 = res.trace.outcome != WalkOutcome::phase1_failed && res.start_objective.has_value();
  s.pivots = res.trace.pivot_count;
  s.value = res.status == LpStatus::optimal ? res.value : 0.0;
  s.oracle_value = oracle.status == LpStatus::optimal ? oracle.value : 0.0;
  s.agrees = res.status == oracle.status &&
             (res.status != LpStatus::optimal ||
              std::abs(res.value - oracle.value) <= 1e-6 * std::max(1.0, std::abs(oracle.value)));
  if (res.status == LpStatus::optimal && res.start_objective) {
    try {
      const ShadowPolygon poly = shadow_polygon(lp, *res.start_objective, lp.objective);
      s.shadow_vertices = static_cast<std::int64_t>(poly.vertex_count());
      double scale = 1.0;
      for (const auto& h : poly.hull_points) scale = std::max({scale, std::abs(h[0]), std::abs(h[1])});
      s.on_shadow = true;
      for (const auto& v : res.trace.visited)
        if (poly.distance_to_hull_vertex(poly.plane.project(v.point.entries())) > 1e-7 * scale) s.on_shadow = false;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::degenerate_plane && e.kind() != ErrorKind::unbounded_shadow) throw;
      s.shadow_vertices = -1;
    }
  }
  return s;
}

inline PivotTrial pivot_trial(const ExperimentConfig& cfg, const LinearProgram& center, std::size_t i) {
  PivotTrial out{i, {}};
  for (double sigma : cfg.sigma_grid) {
    auto rows = gaussian_points(center.rows, sigma, SeedSpec{cfg.master_seed, i}).points;
    out.samples.push_back(measure_pivots(LinearProgram{std::move(rows), center.rhs, center.objective}));
  }
  return out;
}

inline Report aggregate_simplex_pivots(const ExperimentConfig& cfg, const std::vector<PivotTrial>& recs,
                                       std::vector<std::string> warnings) {
  Report r = detail::start_report(cfg, std::move(warnings));
  r.main.columns = {"sigma",        "trials",     "optimal",           "unbounded",      "infeasible",
                    "mean_pivots",  "median_pivots", "max_pivots",    "oracle_agreements", "shadow_checked",
                    "shadow_within"};
  for (std::size_t s = 0; s < cfg.sigma_grid.size(); ++s) {
    const double sigma = cfg.sigma_grid[s];
    std::size_t optimal = 0, unbounded = 0, infeasible = 0, agree = 0, checked = 0, within = 0;
    std::vector<double> pivots;
    for (const auto& rec : recs) {
      const PivotSample& x = rec.samples.at(s);
      optimal += x.status == "optimal";
      unbounded += x.status == "unbounded";
      infeasible += x.status == "infeasible";
      agree += x.agrees;
      if (x.phase2) pivots.push_back(static_cast<double>(x.pivots));
      if (x.shadow_vertices >= 0) {
        ++checked;
        within += x.on_shadow && static_cast<std::int64_t>(x.pivots) <= x.shadow_vertices;
      }
    }
    const double mx = pivots.empty() ? std::numeric_limits<double>::quiet_NaN()
                                     : *std::max_element(pivots.begin(), pivots.end());
    r.main.add({num(sigma), recs.size(), optimal, unbounded, infeasible, detail::optional_num(detail::mean_of(pivots)),
                detail::optional_num(detail::median_of(pivots)), detail::optional_num(mx), agree, checked, within});
    Check oracle{"oracle_agreement", detail::where_sigma(sigma), static_cast<double>(agree),
                 0.0, static_cast<double>(recs.size()), agree == recs.size() ? "respected" : "violated", false};
    r.checks.push_back(std::move(oracle));
    Check shadow{"pivots_within_shadow", detail::where_sigma(sigma), static_cast<double>(within),
                 0.0, static_cast<double>(checked), within == checked ? "respected" : "violated", false};
    r.checks.push_back(std::move(shadow));
  }
  r.meta["pivot_statistic"] = "Phase II pivots over trials where Phase II ran";
  detail::attach_per_trial(r, cfg, recs);
  return r;
}

inline Report run_simplex_pivots(ExperimentConfig cfg) {
  cfg.kind = ExperimentKind::simplex_pivots;
  resolve_and_validate(cfg);
  check_subset_budget(cfg.n, cfg.d, kDefaultSubsetBudget);
  const LinearProgram center = lp_center(cfg.centers.front(), cfg.n, cfg.d);
  auto recs = parallel_map(cfg.trials, cfg.threads, [&](std::size_t i) { return pivot_trial(cfg, center, i); });
  return aggregate_simplex_pivots(cfg, recs, detail::point_warnings(center.rows, cfg.sigma_grid, false));
}

// ---------------------------------------------------------------------------
// Perceptron margins and iterations

struct PerceptronSample {
  bool feasible = false;
  double nu = 0.0;
  std::uint64_t iterations = 0;
  std::string status;           // solved, iteration_cap_reached, or skipped
  std::uint64_t bound = 0;      // ceil(1 / nu^2) when feasible

  Json to_json() const {
    return Json{{"feasible", feasible}, {"nu", num(nu)}, {"iterations", iterations}, {"status", status},
                {"bound", bound}};
  }
  static PerceptronSample from_json(const Json& j) {
    return {j.at("feasible").get<bool>(), from_num(j.at("nu")), j.at("iterations").get<std::uint64_t>(),
            j.at("status").get<std::string>(), j.at("bound").get<std::uint64_t>()};
  }
};

struct PerceptronTrial {
  std::size_t trial = 0;
  std::vector<PerceptronSample> samples;  // one per sigma

  Json to_json() const {
    Json arr = Json::array();
    for (const auto& s : samples) arr.push_back(s.to_json());
    return Json{{"trial", trial}, {"samples", std::move(arr)}};
  }
  static PerceptronTrial from_json(const Json& j) {
    PerceptronTrial t{j.at("trial").get<std::size_t>(), {}};
    for (const auto& s : j.at("samples")) t.samples.push_back(PerceptronSample::from_json(s));
    return t;
  }
};

/// Computes the margin and, when the instance is feasible, runs the
/// perceptron with a cap one past its iteration bound (or the configured cap,
/// whichever is smaller).
inline PerceptronSample measure_perceptron(const PerceptronInstance& inst, SeedSpec seed, std::uint64_t cap,
                                           SelectionRule rule) {
  PerceptronSample s;
  const Margin m = wiggle_room_detail(inst);
  s.feasible = m.feasible;
  s.nu = m.nu;
  if (!m.feasible) {
    s.status = "skipped";
    return s;
  }
  s.bound = iteration_bound(m.nu);
  const std::uint64_t run_cap = s.bound < cap ? s.bound + 1 : cap;
  const PerceptronRun run = run_perceptron(inst, seed, run_cap, rule);
  s.iterations = run.iterations;
  s.status = std::string(to_string(run.status));
  return s;
}

inline PerceptronTrial perceptron_trial(const ExperimentConfig& cfg, const std::vector<Vector>& centers,
                                        std::size_t i) {
  PerceptronTrial out{i, {}};
  for (double sigma : cfg.sigma_grid) {
    auto pts = gaussian_points(centers, sigma, SeedSpec{cfg.master_seed, i}).points;
    out.samples.push_back(measure_perceptron(PerceptronInstance(std::move(pts)),
                                             SeedSpec{splitmix64(cfg.master_seed), i}, cfg.iteration_cap, cfg.rule));
  }
  return out;
}

/// Tail probability used to fit the iteration shape.
inline constexpr double kShapeDelta = 0.1;

inline Report aggregate_perceptron_tail(const ExperimentConfig& cfg, const std::vector<PerceptronTrial>& recs,
                                        std::vector<std::string> warnings) {
  Report r = detail::start_report(cfg, std::move(warnings));
  r.main.columns = {"sigma",  "threshold", "feasible_trials", "infeasible_frequency", "empirical",
                    "stderr", "bound_raw", "bound_reported",  "vacuous"};
  Table iters;
  iters.name = "iterations";
  iters.columns = {"sigma",          "feasible_trials", "mean_iterations", "max_iterations", "bound_checked",
                   "bound_violations", "cap_reached",   "shape",           "fitted_c"};
  for (std::size_t s = 0; s < cfg.sigma_grid.size(); ++s) {
    const double sigma = cfg.sigma_grid[s];
    std::size_t feasible = 0;
    for (const auto& rec : recs) feasible += rec.samples.at(s).feasible;
    const double infeasible_freq =
        static_cast<double>(recs.size() - feasible) / static_cast<double>(recs.size());
    for (double t : cfg.thresholds) {
      std::size_t over = 0;
      for (const auto& rec : recs) {
        const PerceptronSample& x = rec.samples.at(s);
        if (x.feasible && 1.0 / x.nu > t) ++over;
      }
      const double p = feasible ? static_cast<double>(over) / static_cast<double>(feasible) : 0.0;
      const double se = feasible ? binomial_stderr(p, feasible) : 0.0;
      const TailBound b = blum_dunagan_tail(cfg.n, cfg.d, sigma, t);
      r.main.add({num(sigma), num(t), feasible, num(infeasible_freq), num(p), num(se), num(b.raw), num(b.reported),
                  b.vacuous});
      Check c{"bound_blum_dunagan", detail::where(sigma, t), p, se, b.reported, "", false};
      c.status = feasible == 0 ? "not_applicable" : b.vacuous ? "vacuous" : bound_status(p, se, b.reported);
      r.checks.push_back(std::move(c));
    }

    std::vector<double> its;
    std::size_t checked = 0, violations = 0, capped = 0;
    for (const auto& rec : recs) {
      const PerceptronSample& x = rec.samples.at(s);
      if (!x.feasible) continue;
      its.push_back(static_cast<double>(x.iterations));
      if (x.status == "solved") {
        ++checked;
        violations += x.iterations > x.bound;
      } else {
        ++capped;
        violations += x.iterations > x.bound;
      }
    }
    const double shape = perceptron_iteration_shape(cfg.n, cfg.d, sigma, kShapeDelta);
    double fitted = std::numeric_limits<double>::quiet_NaN();
    if (!its.empty()) {
      std::vector<double> sorted = its;
      std::sort(sorted.begin(), sorted.end());
      const auto rank = static_cast<std::size_t>(std::ceil((1.0 - kShapeDelta) * static_cast<double>(sorted.size())));
      fitted = sorted[std::max<std::size_t>(rank, 1) - 1] / shape;
    }
    const double mx = its.empty() ? std::numeric_limits<double>::quiet_NaN() : *std::max_element(its.begin(), its.end());
    iters.add({num(sigma), feasible, detail::optional_num(detail::mean_of(its)), detail::optional_num(mx), checked,
               violations, capped, num(shape), detail::optional_num(fitted)});
    r.checks.push_back({"iteration_bound", detail::where_sigma(sigma), static_cast<double>(violations), 0.0, 0.0,
                        violations == 0 ? "respected" : "violated", false});
  }
  r.extra.push_back(std::move(iters));
  r.meta["margin_tail_population"] = "feasible trials only";
  r.meta["shape_delta"] = num(kShapeDelta);
  r.meta["shape"] = "d^3 n^2 log^2(n/delta) / (delta^2 sigma^2)";
  detail::attach_per_trial(r, cfg, recs);
  return r;
}

inline Report run_perceptron_tail(ExperimentConfig cfg) {
  cfg.kind = ExperimentKind::perceptron_tail;
  resolve_and_validate(cfg);
  for (double s : cfg.sigma_grid)
    if (!in_perceptron_regime(s, cfg.d)) fail(ErrorKind::out_of_regime, "sigma^2 must be below 1/(2d)");
  const auto centers = point_centers(cfg.centers.front(), cfg.n, cfg.d);
  auto recs = parallel_map(cfg.trials, cfg.threads, [&](std::size_t i) { return perceptron_trial(cfg, centers, i); });
  return aggregate_perceptron_tail(cfg, recs, detail::point_warnings(centers, cfg.sigma_grid, false));
}

// ---------------------------------------------------------------------------
// Submatrix inverse-norm counting

struct SubmatrixSample {
  std::size_t sum_x = 0;
  double min_inverse_norm = 0.0;
  bool event = false;

  Json to_json() const { return Json{{"sum_x", sum_x}, {"min_inverse_norm", num(min_inverse_norm)}, {"event", event}}; }
  static SubmatrixSample from_json(const Json& j) {
    return {j.at("sum_x").get<std::size_t>(), from_num(j.at("min_inverse_norm")), j.at("event").get<bool>()};
  }
};

struct SubmatrixTrial {
  std::size_t trial = 0;
  std::vector<SubmatrixSample> samples;  // one per sigma

  Json to_json() const {
    Json arr = Json::array();
    for (const auto& s : samples) arr.push_back(s.to_json());
    return Json{{"trial", trial}, {"samples", std::move(arr)}};
  }
  static SubmatrixTrial from_json(const Json& j) {
    SubmatrixTrial t{j.at("trial").get<std::size_t>(), {}};
    for (const auto& s : j.at("samples")) t.samples.push_back(SubmatrixSample::from_json(s));
    return t;
  }
};

/// sigma^2 / (8 d^{3/2} n^7)
inline double submatrix_threshold(std::size_t n, std::size_t d, double sigma) {
  const double dd = static_cast<double>(d);
  return sigma * sigma / (8.0 * dd * std::sqrt(dd) * std::pow(static_cast<double>(n), 7));
}

/// ceil((n - d - 1) / 2) * C(n, d - 1), zero when n <= d + 1.
inline double submatrix_rhs(std::size_t n, std::size_t d) {
  if (n <= d + 1) return 0.0;
  return static_cast<double>((n - d) / 2) * binomial(n, d - 1);
}

/// 1 - n^{-d} - n^{-n+d-1} - n^{-2.9d+1}
inline double submatrix_stated_probability(std::size_t n, std::size_t d) {
  const double nn = static_cast<double>(n), dd = static_cast<double>(d);
  return 1.0 - std::pow(nn, -dd) - std::pow(nn, -nn + dd - 1.0) - std::pow(nn, -2.9 * dd + 1.0);
}

inline SubmatrixTrial submatrix_trial(const ExperimentConfig& cfg, const std::vector<Vector>& centers, std::size_t i) {
  SubmatrixTrial out{i, {}};
  const double rhs = submatrix_rhs(cfg.n, cfg.d);
  for (double sigma : cfg.sigma_grid) {
    const auto pts = gaussian_points(centers, sigma, SeedSpec{cfg.master_seed, i}).points;
    const double tau = submatrix_threshold(cfg.n, cfg.d, sigma);
    SubmatrixSample s;
    s.min_inverse_norm = kInfinity;
    std::vector<Vector> cols(cfg.d);
    for_each_combination(cfg.n, cfg.d, [&](const std::vector<std::size_t>& subset) {
      for (std::size_t k = 0; k < subset.size(); ++k) cols[k] = pts[subset[k]];
      const double inv = inverse_norm(Matrix::from_columns(cols));
      s.min_inverse_norm = std::min(s.min_inverse_norm, inv);
      s.sum_x += inv >= tau;
      return true;
    });
    s.event = static_cast<double>(cfg.d) / 2.0 * static_cast<double>(s.sum_x) < rhs;
    out.samples.push_back(s);
  }
  return out;
}

inline Report aggregate_submatrix_lemma(const ExperimentConfig& cfg, const std::vector<SubmatrixTrial>& recs,
                                        std::vector<std::string> warnings) {
  Report r = detail::start_report(cfg, std::move(warnings));
  r.main.columns = {"sigma", "indicator_threshold", "subsets_per_trial", "mean_sum_x", "mean_lhs",
                    "rhs",   "event_frequency",     "stderr",            "stated_probability"};
  const double subsets = binomial(cfg.n, cfg.d);
  const double rhs = submatrix_rhs(cfg.n, cfg.d);
  const double stated = submatrix_stated_probability(cfg.n, cfg.d);
  for (std::size_t s = 0; s < cfg.sigma_grid.size(); ++s) {
    const double sigma = cfg.sigma_grid[s];
    std::vector<double> sums;
    std::size_t events = 0;
    for (const auto& rec : recs) {
      sums.push_back(static_cast<double>(rec.samples.at(s).sum_x));
      events += rec.samples.at(s).event;
    }
    const double mean_sum = detail::mean_of(sums);
    const double p = static_cast<double>(events) / static_cast<double>(recs.size());
    const double se = binomial_stderr(p, recs.size());
    r.main.add({num(sigma), num(submatrix_threshold(cfg.n, cfg.d, sigma)), num(subsets), num(mean_sum),
                num(static_cast<double>(cfg.d) / 2.0 * mean_sum), num(rhs), num(p), num(se), num(stated)});
    // A lower bound on a probability: consistent when the measured frequency
    // reaches it within three standard errors.
    r.checks.push_back({"stated_probability", detail::where_sigma(sigma), p, se, stated,
                        p + 3.0 * se >= stated ? "consistent" : "inconsistent", false});
  }
  r.meta["event"] = "(d/2) sum_I X_I < ceil((n-d-1)/2) C(n, d-1)";
  r.meta["indicator"] = "X_I = 1 iff ||[a_i : i in I]^{-1}|| >= sigma^2 / (8 d^{3/2} n^7)";
  r.meta["direction_flagged"] = true;
  detail::attach_per_trial(r, cfg, recs);
  return r;
}

inline Report run_submatrix_lemma(ExperimentConfig cfg) {
  cfg.kind = ExperimentKind::submatrix_lemma;
  resolve_and_validate(cfg);
  require(cfg.n >= cfg.d, ErrorKind::invalid_input, "submatrix lemma needs n >= d");
  check_subset_budget(cfg.n, cfg.d, 1e5);
  for (double s : cfg.sigma_grid)
    if (!in_shadow_regime(s, cfg.n, cfg.d)) fail(ErrorKind::out_of_regime, "sigma^2 exceeds 1/(9 d log n)");
  const auto centers = point_centers(cfg.centers.front(), cfg.n, cfg.d);
  auto recs = parallel_map(cfg.trials, cfg.threads, [&](std::size_t i) { return submatrix_trial(cfg, centers, i); });
  return aggregate_submatrix_lemma(cfg, recs, detail::point_warnings(centers, cfg.sigma_grid, false));
}

// ---------------------------------------------------------------------------
// Smoothed complexity profile

struct ProfileSample {
  std::size_t center = 0;
  std::size_t sigma = 0;  // index into the sigma grid
  double measure = 0.0;
  std::string status;
};

struct ProfileTrial {
  std::size_t trial = 0;
  std::vector<ProfileSample> samples;  // center-major, then sigma

  Json to_json() const {
    Json arr = Json::array();
    for (const auto& s : samples)
      arr.push_back(Json{{"center", s.center}, {"sigma", s.sigma}, {"measure", num(s.measure)}, {"status", s.status}});
    return Json{{"trial", trial}, {"samples", std::move(arr)}};
  }
  static ProfileTrial from_json(const Json& j) {
    ProfileTrial t{j.at("trial").get<std::size_t>(), {}};
    for (const auto& s : j.at("samples"))
      t.samples.push_back({s.at("center").get<std::size_t>(), s.at("sigma").get<std::size_t>(),
                           from_num(s.at("measure")), s.at("status").get<std::string>()});
    return t;
  }
};

/// Input data of one center, flattened so the whole input x can be perturbed
/// as x + sigma ||x|| r.
struct ProfileCenter {
  std::string name;
  LinearProgram lp;               // simplex measure
  std::vector<Vector> points;     // perceptron measure
};

inline ProfileCenter load_profile_center(const ExperimentConfig& cfg, const std::string& spec) {
  ProfileCenter c;
  c.name = spec;
  if (cfg.measure == SmoothedMeasure::simplex_pivots)
    c.lp = lp_center(spec, cfg.n, cfg.d);
  else
    c.points = point_centers(spec, cfg.n, cfg.d);
  return c;
}

inline std::vector<double> flatten(const std::vector<Vector>& vs) {
  std::vector<double> out;
  for (const auto& v : vs) out.insert(out.end(), v.begin(), v.end());
  return out;
}

inline std::vector<Vector> unflatten(const Vector& flat, std::size_t n, std::size_t d) {
  std::vector<Vector> out;
  for (std::size_t i = 0; i < n; ++i)
    out.emplace_back(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(i * d),
                                         flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * d)));
  return out;
}

inline ProfileSample measure_profile(const ExperimentConfig& cfg, const ProfileCenter& c, double sigma,
                                     std::size_t i) {
  ProfileSample s;
  if (cfg.measure == SmoothedMeasure::simplex_pivots) {
    const Vector x(flatten(c.lp.rows));
    const Vector px = smoothed_input(x, sigma, SeedSpec{cfg.master_seed, i});
    const SolveResult res = solve(LinearProgram{unflatten(px, c.lp.n(), c.lp.d()), c.lp.rhs, c.lp.objective});
    s.measure = static_cast<double>(res.trace.pivot_count);
    s.status = std::string(to_string(res.status));
  } else {
    const Vector x(flatten(c.points));
    const Vector px = smoothed_input(x, sigma, SeedSpec{cfg.master_seed, i});
    const PerceptronRun run = run_perceptron(PerceptronInstance(unflatten(px, c.points.size(), cfg.d)),
                                             SeedSpec{splitmix64(cfg.master_seed), i}, cfg.iteration_cap, cfg.rule);
    s.measure = static_cast<double>(run.iterations);
    s.status = std::string(to_string(run.status));
  }
  return s;
}

inline ProfileTrial profile_trial(const ExperimentConfig& cfg, const std::vector<ProfileCenter>& centers,
                                  std::size_t i) {
  ProfileTrial out{i, {}};
  for (std::size_t c = 0; c < centers.size(); ++c)
    for (std::size_t s = 0; s < cfg.sigma_grid.size(); ++s) {
      ProfileSample x = measure_profile(cfg, centers[c], cfg.sigma_grid[s], i);
      x.center = c;
      x.sigma = s;
      out.samples.push_back(std::move(x));
    }
  return out;
}

inline Report aggregate_smoothed_profile(const ExperimentConfig& cfg, const std::vector<ProfileTrial>& recs,
                                         std::vector<std::string> warnings) {
  Report r = detail::start_report(cfg, std::move(warnings));
  r.main.columns = {"center", "sigma", "trials", "mean_measure", "stderr", "halfwidth_95"};
  Table smoothed;
  smoothed.name = "smoothed";
  smoothed.columns = {"sigma", "smoothed_estimate", "argmax_center", "centers_tested"};

  const std::size_t nc = cfg.centers.size(), ns = cfg.sigma_grid.size();
  std::vector<std::vector<double>> values(nc * ns);
  for (const auto& rec : recs)
    for (const auto& x : rec.samples) values.at(x.center * ns + x.sigma).push_back(x.measure);

  std::vector<double> means(nc * ns);
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t s = 0; s < ns; ++s) {
      const auto& v = values[c * ns + s];
      const double m = detail::mean_of(v);
      const double se = detail::mean_stderr(v);
      means[c * ns + s] = m;
      r.main.add({cfg.centers[c], num(cfg.sigma_grid[s]), v.size(), num(m), num(se), num(1.96 * se)});
    }
  for (std::size_t s = 0; s < ns; ++s) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < nc; ++c)
      if (means[c * ns + s] > means[best * ns + s]) best = c;
    smoothed.add({num(cfg.sigma_grid[s]), num(means[best * ns + s]), cfg.centers[best], nc});
  }
  r.extra.push_back(std::move(smoothed));
  r.meta["measure"] = std::string(to_string(cfg.measure));
  r.meta["estimate_label"] = "max over tested centers";
  r.meta["perturbation"] = "x + sigma ||x|| r, r standard Gaussian over the whole input";
  detail::attach_per_trial(r, cfg, recs);
  return r;
}

inline Report estimate_smoothed_complexity(ExperimentConfig cfg) {
  cfg.kind = ExperimentKind::smoothed_profile;
  resolve_and_validate(cfg);
  if (cfg.measure == SmoothedMeasure::simplex_pivots) check_subset_budget(cfg.n, cfg.d, kDefaultSubsetBudget);
  std::vector<ProfileCenter> centers;
  for (const auto& spec : cfg.centers) centers.push_back(load_profile_center(cfg, spec));
  auto recs = parallel_map(cfg.trials, cfg.threads, [&](std::size_t i) { return profile_trial(cfg, centers, i); });
  return aggregate_smoothed_profile(cfg, recs, {});
}

// ---------------------------------------------------------------------------
// Dispatch and replay

inline Report run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::matrix_tail: return run_matrix_tail(cfg);
    case ExperimentKind::rademacher_tail: return run_rademacher_tail(cfg);
    case ExperimentKind::shadow_size: return run_shadow_size(cfg);
    case ExperimentKind::simplex_pivots: return run_simplex_pivots(cfg);
    case ExperimentKind::perceptron_tail: return run_perceptron_tail(cfg);
    case ExperimentKind::submatrix_lemma: return run_submatrix_lemma(cfg);
    case ExperimentKind::smoothed_profile: return estimate_smoothed_complexity(cfg);
  }
  fail(ErrorKind::invalid_input, "unknown experiment kind");
}

/// Rebuilds a report from its configuration echo, warnings and per-trial
/// records alone.
inline Report replay(const Json& doc) {
  require(doc.contains("config") && doc.contains("per_trial"), ErrorKind::invalid_input,
          "report has no per-trial records to replay");
  const ExperimentConfig cfg = config_from_echo(doc.at("config"));
  std::vector<std::string> warnings;
  if (doc.contains("warnings")) warnings = doc.at("warnings").get<std::vector<std::string>>();
  const Json& trials = doc.at("per_trial");
  switch (cfg.kind) {
    case ExperimentKind::matrix_tail:
      return aggregate_matrix_tail(cfg, detail::records_from_json<MatrixTailTrial>(trials), warnings);
    case ExperimentKind::rademacher_tail:
      return aggregate_rademacher_tail(cfg, detail::records_from_json<RademacherTrial>(trials), warnings);
    case ExperimentKind::shadow_size:
      return aggregate_shadow_size(cfg, detail::records_from_json<ShadowTrial>(trials), warnings);
    case ExperimentKind::simplex_pivots:
      return aggregate_simplex_pivots(cfg, detail::records_from_json<PivotTrial>(trials), warnings);
    case ExperimentKind::perceptron_tail:
      return aggregate_perceptron_tail(cfg, detail::records_from_json<PerceptronTrial>(trials), warnings);
    case ExperimentKind::submatrix_lemma:
      return aggregate_submatrix_lemma(cfg, detail::records_from_json<SubmatrixTrial>(trials), warnings);
    case ExperimentKind::smoothed_profile:
      return aggregate_smoothed_profile(cfg, detail::records_from_json<ProfileTrial>(trials), warnings);
  }
  fail(ErrorKind::invalid_input, "unknown experiment kind");
}

struct ReplayResult {
  bool matches = false;
  std::vector<std::string> mismatched_sections;
};

/// Parses a JSON report, replays it and compares every section the replay
/// reproduces.
inline ReplayResult verify_report(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorKind::invalid_input, std::string("report is not valid JSON: ") + e.what());
  }
  const Json rebuilt = report_to_json(replay(doc));
  ReplayResult out;
  for (const auto& [key, value] : rebuilt.items())
    if (!doc.contains(key) || doc.at(key) != value) out.mismatched_sections.push_back(key);
  for (const auto& [key, value] : doc.items())
    if (!rebuilt.contains(key)) out.mismatched_sections.push_back(key);
  out.matches = out.mismatched_sections.empty() && rebuilt.dump(2) + "\n" == text;
  if (out.mismatched_sections.empty() && !out.matches) out.mismatched_sections.push_back("formatting");
  return out;
}

}  // namespace smoothlab::lab
