// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "smoothlab/lab/experiments.hpp"

using namespace smoothlab;
using namespace smoothlab::lab;

namespace {

const std::string kCli = SMOOTHLAB_CLI_PATH;

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail_with(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

double column(const Table& t, std::size_t row, const std::string& name) {
  for (std::size_t c = 0; c < t.columns.size(); ++c)
    if (t.columns[c] == name) return from_num(t.rows.at(row).at(c));
  throw std::out_of_range(name);
}

std::string work_dir() {
  const char* base = std::getenv("TMPDIR");
  std::string dir = std::string(base ? base : "/tmp") + "/smoothlab_acceptance";
  std::filesystem::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const int status = std::system((kCli + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome height_inequality() {
  Outcome o;
  RandomStream rng(SeedSpec{101, 0});
  const double sigmas[] = {1.0, 0.1, 0.01, 1e-3};
  std::size_t checked = 0;
  double worst = 0.0;
  for (std::size_t k = 0; k < 10000; ++k) {
    const std::size_t d = 2 + k % 9;
    Matrix center = Matrix::zeros(d, d);
    switch (k / 9 % 4) {
      case 0: break;
      case 1: center = matrix_center("ones", d); break;
      case 2: {
        std::vector<double> e(d * d);
        for (double& x : e) x = 2.0 * rng.uniform() - 1.0;
        center = Matrix(d, d, std::move(e));
        break;
      }
      case 3: center = Matrix::identity(d); break;
    }
    const double sigma = sigmas[k / 36 % 4];
    const Matrix a = gaussian_matrix(center, sigma, rng);
    const double lhs = inverse_norm(a);
    const double rhs = std::sqrt(static_cast<double>(d)) / height(a);
    ++checked;
    if (std::isfinite(rhs)) worst = std::max(worst, lhs / rhs);
    if (!(lhs <= rhs * (1.0 + 1e-8))) o.fail_with("sample " + std::to_string(k) + " ratio " + fmt(lhs / rhs));
  }
  if (o.pass) o.detail = std::to_string(checked) + " matrices, max ratio " + fmt(worst);
  return o;
}

Outcome edelman() {
  Outcome o;
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::matrix_tail;
  cfg.d = 4;
  cfg.sigma_grid = {1.0};
  cfg.thresholds = {10, 20, 40};
  cfg.trials = 20000;
  cfg.master_seed = 7;
  const Report r = run_matrix_tail(cfg);
  std::string detail;
  for (std::size_t row = 0; row < 3; ++row) {
    const double t = cfg.thresholds[row];
    const double p = column(r.main, row, "empirical"), se = column(r.main, row, "stderr");
    const double bound = 2.0 / t;
    if (column(r.main, row, "bound_edelman") != bound) o.fail_with("bound_edelman column differs from sqrt(d)/t");
    if (!(p <= bound + 3 * se)) o.fail_with("t=" + fmt(t) + " empirical " + fmt(p) + " > " + fmt(bound) + "+3SE");
    detail += "t=" + fmt(t) + ": " + fmt(p) + "<=" + fmt(bound) + "; ";
  }

  cfg.d = 1;
  cfg.thresholds = {2, 10, 40};
  const Report one = run_matrix_tail(cfg);
  for (std::size_t row = 0; row < 3; ++row) {
    const double t = cfg.thresholds[row];
    const double exact = std::erf(1.0 / (t * std::sqrt(2.0)));
    const double p = column(one.main, row, "empirical"), se = column(one.main, row, "stderr");
    if (!(std::abs(p - exact) <= 3 * se)) o.fail_with("d=1 t=" + fmt(t) + " empirical " + fmt(p) + " vs " + fmt(exact));
  }
  if (o.pass) o.detail = detail + "d=1 closed form within 3SE";
  return o;
}

Outcome sst_bounds() {
  Outcome o;
  std::size_t compared = 0;
  for (const char* center : {"zero", "ones"}) {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::matrix_tail;
    cfg.d = 4;
    cfg.sigma_grid = {0.1, 0.05};
    cfg.thresholds = {320, 640, 1280};
    cfg.trials = 20000;
    cfg.master_seed = 17;
    cfg.centers = {center};
    const Report r = run_matrix_tail(cfg);
    for (std::size_t row = 0; row < r.main.rows.size(); ++row) {
      const double p = column(r.main, row, "empirical"), se = column(r.main, row, "stderr");
      const double s = column(r.main, row, "sigma"), x = column(r.main, row, "threshold");
      const double sst = 1.823 * 2.0 / (x * s), thm43 = 8.0 / (x * s);
      for (const double b : {sst, thm43}) {
        if (b > 0.5) o.fail_with("threshold choice leaves a bound above 0.5");
        if (!(p <= b + 3 * se))
          o.fail_with(std::string(center) + " sigma=" + fmt(s) + " x=" + fmt(x) + " empirical " + fmt(p) + " > " + fmt(b));
        ++compared;
      }
    }
  }
  if (o.pass) o.detail = std::to_string(compared) + " bound comparisons respected";
  return o;
}

PerceptronInstance random_feasible_instance(RandomStream& rng, std::size_t n, std::size_t d) {
  const Vector u = normalized(Vector(rng.gaussian_vector(d)));
  const double spread = 0.2 + rng.uniform();
  std::vector<Vector> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back((0.5 + rng.uniform()) * (u + spread * Vector(rng.gaussian_vector(d))));
  return PerceptronInstance(std::move(pts));
}

Outcome block_novikoff() {
  Outcome o;
  RandomStream rng(SeedSpec{202, 0});
  std::size_t instances = 0, runs = 0, exceptions = 0;
  std::uint64_t max_iters = 0;
  while (instances < 1000) {
    const std::size_t d = 1 + rng.next_word() % 5;
    const std::size_t n = 2 + rng.next_word() % 15;
    const PerceptronInstance inst = random_feasible_instance(rng, n, d);
    const Margin m = wiggle_room_detail(inst);
    if (!m.feasible || m.nu < 1e-3) continue;
    ++instances;
    const std::uint64_t bound = iteration_bound(m.nu);
    for (auto rule : {SelectionRule::lowest_index, SelectionRule::most_violated, SelectionRule::random_violated}) {
      try {
        const PerceptronRun run = run_perceptron(inst, SeedSpec{202, instances}, bound + 1, rule);
        ++runs;
        max_iters = std::max(max_iters, run.iterations);
        if (run.status != PerceptronStatus::solved || run.iterations > bound)
          o.fail_with("instance " + std::to_string(instances) + " rule " + std::string(to_string(rule)) + ": " +
                      std::to_string(run.iterations) + " > " + std::to_string(bound));
      } catch (const std::exception& e) {
        ++exceptions;
        o.fail_with(std::string("exception: ") + e.what());
      }
    }
  }
  if (o.pass)
    o.detail = std::to_string(instances) + " instances, " + std::to_string(runs) + " runs, 0 exceptions, max " +
               std::to_string(max_iters) + " iterations";
  return o;
}

double grid_margin(const PerceptronInstance& inst, int directions) {
  double best = -kInfinity;
  std::vector<std::array<double, 2>> unit;
  for (const auto& p : inst.points) unit.push_back({p[0] / norm(p), p[1] / norm(p)});
  for (int k = 0; k < directions; ++k) {
    const double a = 2.0 * M_PI * k / directions;
    const double c = std::cos(a), s = std::sin(a);
    double worst = kInfinity;
    for (const auto& u : unit) worst = std::min(worst, u[0] * c + u[1] * s);
    best = std::max(best, worst);
  }
  return best;
}

Outcome nu_oracle() {
  Outcome o;
  RandomStream rng(SeedSpec{303, 0});
  double worst = 0.0;
  std::size_t feasible = 0;
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 2 + rng.next_word() % 8;
    std::vector<Vector> pts;
    const Vector u = normalized(Vector(rng.gaussian_vector(2)));
    const double spread = 0.1 + 1.5 * rng.uniform();
    for (std::size_t i = 0; i < n; ++i) pts.push_back(u + spread * Vector(rng.gaussian_vector(2)));
    const PerceptronInstance inst(std::move(pts));
    const double nu = wiggle_room(inst);
    const double oracle = std::max(0.0, grid_margin(inst, 100000));
    feasible += nu > 0;
    worst = std::max(worst, std::abs(nu - oracle));
    if (!(std::abs(nu - oracle) <= 1e-4)) o.fail_with("instance " + std::to_string(k) + ": " + fmt(nu) + " vs " + fmt(oracle));
  }
  if (o.pass) o.detail = "200 instances (" + std::to_string(feasible) + " feasible), max gap " + fmt(worst);
  return o;
}

Outcome simplex_correctness() {
  Outcome o;
  RandomStream rng(SeedSpec{404, 0});
  std::size_t trials = 0, pivots_total = 0, shadow_checked = 0;
  while (trials < 500) {
    const std::size_t d = 2 + rng.next_word() % 2;
    const std::size_t n = 2 * d + rng.next_word() % (11 - 2 * d);
    const double sigma = 0.02 + 0.3 * rng.uniform();
    // Perturbed cross-polytope-like rows ±e_j plus random extra rows, b = 1:
    // the origin is feasible and, once bounded, z = sum of positive row
    // multiples keeps the optimum finite.
    std::vector<Vector> centers;
    for (std::size_t j = 0; j < d; ++j) {
      centers.push_back(Vector::unit(d, j));
      centers.push_back(-1.0 * Vector::unit(d, j));
    }
    while (centers.size() < n) centers.push_back(normalized(Vector(rng.gaussian_vector(d))));
    auto rows = gaussian_points(centers, sigma, rng).points;
    std::vector<double> z(d, 0.0);
    for (const auto& r : rows) {
      const double w = rng.uniform();
      for (std::size_t j = 0; j < d; ++j) z[j] += w * r[j];
    }
    const LinearProgram lp = LinearProgram::unit_rhs(std::move(rows), Vector(std::move(z)));
    if (!is_bounded(lp)) continue;
    ++trials;

    const SolveResult res = solve(lp);
    const LpOutcome oracle = brute_force_optimum(lp);
    if (res.status != LpStatus::optimal || oracle.status != LpStatus::optimal) {
      o.fail_with("trial " + std::to_string(trials) + ": status " + std::string(to_string(res.status)) + " vs oracle " +
                  std::string(to_string(oracle.status)));
      continue;
    }
    if (std::abs(res.value - oracle.value) > 1e-6)
      o.fail_with("trial " + std::to_string(trials) + ": value " + fmt(res.value) + " vs " + fmt(oracle.value));
    pivots_total += res.trace.pivot_count;
    try {
      const ShadowPolygon poly = shadow_polygon(lp, *res.start_objective, lp.objective);
      ++shadow_checked;
      double scale = 1.0;
      for (const auto& h : poly.hull_points) scale = std::max({scale, std::abs(h[0]), std::abs(h[1])});
      for (const auto& v : res.trace.visited)
        if (poly.distance_to_hull_vertex(poly.plane.project(v.point.entries())) > 1e-7 * scale)
          o.fail_with("trial " + std::to_string(trials) + ": visited vertex off the shadow hull");
      if (res.trace.pivot_count > poly.vertex_count())
        o.fail_with("trial " + std::to_string(trials) + ": pivots exceed shadow size");
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::degenerate_plane) throw;
      if (res.trace.pivot_count != 0) o.fail_with("parallel plane with nonzero pivots");
    }
  }
  if (o.pass)
    o.detail = "500 LPs agree with brute force; " + std::to_string(shadow_checked) + " shadow checks; " +
               std::to_string(pivots_total) + " pivots total";
  return o;
}

Outcome shadow_geometry() {
  Outcome o;
  std::vector<Vector> cube;
  for (std::size_t j = 0; j < 3; ++j) {
    cube.push_back(Vector::unit(3, j));
    cube.push_back(-1.0 * Vector::unit(3, j));
  }
  const auto generic = shadow_polygon(std::span<const Vector>(cube), Vector{1, 0.3, 0.2}, Vector{0.1, 1, 0.5});
  const auto axis = shadow_polygon(std::span<const Vector>(cube), Vector{1, 0, 0}, Vector{0, 1, 0});
  if (generic.vertex_count() != 6) o.fail_with("generic cube shadow has " + std::to_string(generic.vertex_count()));
  if (axis.vertex_count() != 4) o.fail_with("axis cube shadow has " + std::to_string(axis.vertex_count()));

  const std::vector<Vector> square{Vector{1, 0}, Vector{-1, 0}, Vector{0, 1}, Vector{0, -1}};
  const auto sq = shadow_polygon(std::span<const Vector>(square), Vector{1, 0}, Vector{0, 1});
  const auto verts = enumerate_vertices(LinearProgram::unit_rhs(square, Vector{1, 0}));
  if (sq.vertex_count() != verts.size()) o.fail_with("d=2 shadow differs from the polygon");
  for (const auto& v : verts)
    if (sq.distance_to_hull_vertex(sq.plane.project(v.point.entries())) > 1e-12) o.fail_with("square vertex missing");

  std::vector<Vector> heptagon;
  for (int k = 0; k < 7; ++k) heptagon.push_back(Vector{std::cos(2 * M_PI * k / 7), std::sin(2 * M_PI * k / 7)});
  const auto hp = shadow_polygon(std::span<const Vector>(heptagon), Vector{0.3, 1}, Vector{1, -0.2});
  if (hp.vertex_count() != 7) o.fail_with("heptagon shadow has " + std::to_string(hp.vertex_count()));
  if (o.pass) o.detail = "cube generic 6, cube axis 4, square 4, heptagon 7";
  return o;
}

Outcome rademacher() {
  Outcome o;
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::rademacher_tail;
  cfg.d = 2;
  cfg.exhaustive = true;
  cfg.thresholds = {2, 10};
  const Report two = run_rademacher_tail(cfg);
  if (two.meta["samples"].get<std::size_t>() != 16 || two.meta["singular_count"].get<std::size_t>() != 8 ||
      column(two.main, 0, "singular_frequency") != 0.5)
    o.fail_with("d=2 exhaustive singular frequency is not exactly 8/16");

  const std::vector<std::string> want = {"d", "threshold", "empirical", "stderr", "singular_frequency",
                                         "bound_conj2_sqrt_term", "mode"};
  std::string detail = "d=2: 8/16 singular; ";
  for (std::size_t d : {5u, 10u}) {
    cfg.d = d;
    cfg.exhaustive = false;
    cfg.trials = 10000;
    cfg.thresholds = {10, 100, 1000};
    cfg.master_seed = 5;
    const Report r = run_rademacher_tail(cfg);
    if (r.main.columns != want || r.main.rows.size() != 3) o.fail_with("d=" + std::to_string(d) + " columns incomplete");
    if (!r.meta.contains("singular_frequency") || r.meta["mode"] != "sampled") o.fail_with("meta incomplete");
    for (const auto& c : r.checks)
      if (!c.conjectural) o.fail_with("tail not labeled conjectural");
    if (!r.meta["conjectural_bounds"].is_array()) o.fail_with("conjectural label missing");
    const Json doc = report_to_json(r);
    for (const char* key : {"schema", "config", "columns", "rows", "checks", "meta", "warnings"})
      if (!doc.contains(key)) o.fail_with(std::string("JSON lacks ") + key);
    detail += "d=" + std::to_string(d) + " singular " + fmt(from_num(r.meta["singular_frequency"])) + "; ";
  }
  if (o.pass) o.detail = detail;
  return o;
}

Outcome shadow_regime() {
  Outcome o;
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::shadow_size;
  cfg.n = 8;
  cfg.d = 3;
  cfg.sigma_grid = {std::sqrt(1.0 / (9.0 * 3.0 * std::log(8.0)))};
  cfg.trials = 200;
  cfg.master_seed = 9;
  const Report r = run_shadow_size(cfg);
  const double mean = column(r.main, 0, "mean_vertices"), bound = column(r.main, 0, "bound_eq2");
  const double expected = 58888678.0 * 8 * 27 / std::pow(cfg.sigma_grid[0], 6);
  if (std::abs(bound - expected) > 1e-12 * expected) o.fail_with("bound column differs from the formula");
  if (!(mean <= bound)) o.fail_with("mean " + fmt(mean) + " exceeds bound");
  if (column(r.main, 0, "below_three") != 0) o.fail_with("bounded shadow with fewer than 3 vertices");

  const std::string over = std::to_string(cfg.sigma_grid[0] * 1.001);
  const int c1 = run_cli("shadow-size --n 8 --d 3 --trials 5 --sigma " + over);
  const int c2 = run_cli("shadow-size --n 8 --d 2 --trials 5 --sigma 0.01");
  const int c3 = run_cli("shadow-size --n 3 --d 3 --trials 5 --sigma 0.01");
  if (c1 != 2 || c2 != 2 || c3 != 2)
    o.fail_with("out-of-regime exit codes " + std::to_string(c1) + "," + std::to_string(c2) + "," + std::to_string(c3));
  if (o.pass)
    o.detail = "mean " + fmt(mean) + " <= " + fmt(bound) + " over " + fmt(column(r.main, 0, "bounded")) +
               " bounded shadows; out-of-regime exits 2";
  return o;
}

std::vector<std::string> cli_runs() {
  const double boundary = std::sqrt(1.0 / (9.0 * 3.0 * std::log(7.0)));
  return {
      "tail-matrix --d 4 --sigma 1,0.1 --threshold 10,40 --center ones --trials 400 --seed 3",
      "tail-rademacher --d 5 --threshold 10,100 --trials 400 --seed 3",
      "tail-rademacher --d 3 --threshold 10 --exhaustive",
      "shadow-size --n 7 --d 3 --sigma " + format_double(boundary) + " --trials 60 --seed 3",
      "simplex-pivots --n 6 --d 3 --sigma 0.5,0.01 --center klee-minty --trials 60 --seed 3",
      "tail-perceptron --n 6 --d 2 --sigma 0.1,0.3 --center e1 --threshold 10,1000 --trials 200 --seed 3",
      "submatrix-lemma --n 6 --d 3 --sigma 0.1 --trials 100 --seed 3",
      "smoothed-profile --n 5 --d 2 --sigma 0,0.5 --center zero,ones,e1 --trials 40 --seed 3",
      "smoothed-profile --n 4 --d 2 --sigma 0,0.3 --center ones,e1 --measure perceptron_iterations --cap 5000 "
      "--trials 40 --seed 3",
  };
}

Outcome determinism() {
  Outcome o;
  const std::string dir = work_dir();
  const std::size_t wide = std::max<std::size_t>(8, std::thread::hardware_concurrency());
  std::size_t files = 0;
  const auto runs = cli_runs();
  for (std::size_t k = 0; k < runs.size(); ++k) {
    for (const char* format : {"csv", "json --per-trial"}) {
      const std::string a = dir + "/det_" + std::to_string(k) + "_serial";
      const std::string b = dir + "/det_" + std::to_string(k) + "_wide";
      const int ca = run_cli(runs[k] + " --format " + format + " --threads 1 --out " + a);
      const int cb = run_cli(runs[k] + " --format " + format + " --threads " + std::to_string(wide) + " --out " + b);
      if (ca != 0 || cb != 0) {
        o.fail_with("exit codes " + std::to_string(ca) + "/" + std::to_string(cb) + " for: " + runs[k]);
        continue;
      }
      if (slurp(a) != slurp(b) || slurp(a).empty()) o.fail_with("outputs differ for: " + runs[k] + " (" + format + ")");
      files += 2;
    }
  }
  if (o.pass) o.detail = std::to_string(files) + " files, threads 1 vs " + std::to_string(wide) + ", byte-identical";
  return o;
}

Outcome replay_verifier() {
  Outcome o;
  const std::string dir = work_dir();
  const auto runs = cli_runs();
  std::set<std::string> kinds;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const std::string path = dir + "/replay_" + std::to_string(k) + ".json";
    if (run_cli(runs[k] + " --format json --per-trial --out " + path) != 0) {
      o.fail_with("run failed: " + runs[k]);
      continue;
    }
    const int code = run_cli("verify " + path);
    const ReplayResult in_process = verify_report(slurp(path));
    if (code != 0 || !in_process.matches) o.fail_with("replay mismatch for: " + runs[k]);
    kinds.insert(Json::parse(slurp(path))["config"]["kind"].get<std::string>());
  }
  if (kinds.size() != std::size(kAllKinds)) o.fail_with("not every experiment kind was replayed");
  if (o.pass) o.detail = std::to_string(runs.size()) + " reports, " + std::to_string(kinds.size()) + " kinds reproduced exactly";
  return o;
}

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;  // 0 when no runtime limit applies
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "height inequality on 10000 Gaussian matrices", 60, height_inequality},
      {2, "Gaussian inverse-norm tail vs sqrt(d)/t", 120, edelman},
      {3, "smoothed inverse-norm tails vs 1.823 sqrt(d)/(x sigma) and d^1.5/(x sigma)", 120, sst_bounds},
      {4, "perceptron iterations within ceil(1/nu^2)", 60, block_novikoff},
      {5, "min-norm-point margin vs grid search", 60, nu_oracle},
      {6, "shadow-vertex simplex vs brute force", 180, simplex_correctness},
      {7, "shadow polygon vertex counts", 1, shadow_geometry},
      {8, "sign-matrix singularity and tail report", 60, rademacher},
      {9, "shadow size within its bound; regime exit code", 120, shadow_regime},
      {10, "serial and parallel runs byte-identical", 0, determinism},
      {11, "replay verifier reproduces every report", 0, replay_verifier},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.fail_with(std::string("uncaught exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0 && secs >= c.limit_seconds)
      o.fail_with("runtime " + fmt(secs) + " s exceeds " + fmt(c.limit_seconds) + " s");
    failures += !o.pass;
    std::cout << "criterion " << c.id << " " << (o.pass ? "PASS" : "FAIL") << "  " << c.name << "  [" << fmt(secs)
              << " s]  " << o.detail << std::endl;
  }
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << std::endl;
  return failures ? 1 : 0;
}
