#pragma once

// Experiment configuration: the plain struct, text conversions for every
// setting, the key=value config-file reader, and center presets.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "smoothlab/error.hpp"
#include "smoothlab/numkit.hpp"
#include "smoothlab/perceptron.hpp"
#include "smoothlab/polytope_lp.hpp"
#include "smoothlab/text_io.hpp"

namespace smoothlab::lab {

enum class ExperimentKind {
  matrix_tail,
  rademacher_tail,
  shadow_size,
  simplex_pivots,
  perceptron_tail,
  submatrix_lemma,
  smoothed_profile,
};

inline constexpr ExperimentKind kAllKinds[] = {
    ExperimentKind::matrix_tail,     ExperimentKind::rademacher_tail, ExperimentKind::shadow_size,
    ExperimentKind::simplex_pivots,  ExperimentKind::perceptron_tail, ExperimentKind::submatrix_lemma,
    ExperimentKind::smoothed_profile,
};

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::matrix_tail: return "matrix_tail";
    case ExperimentKind::rademacher_tail: return "rademacher_tail";
    case ExperimentKind::shadow_size: return "shadow_size";
    case ExperimentKind::simplex_pivots: return "simplex_pivots";
    case ExperimentKind::perceptron_tail: return "perceptron_tail";
    case ExperimentKind::submatrix_lemma: return "submatrix_lemma";
    case ExperimentKind::smoothed_profile: return "smoothed_profile";
  }
  return "unknown";
}

/// Subcommand spelling, e.g. "tail-matrix".
inline std::string_view command_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::matrix_tail: return "tail-matrix";
    case ExperimentKind::rademacher_tail: return "tail-rademacher";
    case ExperimentKind::shadow_size: return "shadow-size";
    case ExperimentKind::simplex_pivots: return "simplex-pivots";
    case ExperimentKind::perceptron_tail: return "tail-perceptron";
    case ExperimentKind::submatrix_lemma: return "submatrix-lemma";
    case ExperimentKind::smoothed_profile: return "smoothed-profile";
  }
  return "unknown";
}

inline ExperimentKind parse_kind(std::string_view s) {
  for (ExperimentKind k : kAllKinds)
    if (s == to_string(k) || s == command_name(k)) return k;
  fail(ErrorKind::invalid_input, "unknown experiment kind '" + std::string(s) + "'");
}

enum class SmoothedMeasure { simplex_pivots, perceptron_iterations };

inline std::string_view to_string(SmoothedMeasure m) {
  return m == SmoothedMeasure::simplex_pivots ? "simplex_pivots" : "perceptron_iterations";
}

inline SmoothedMeasure parse_measure(std::string_view s) {
  if (s == "simplex_pivots" || s == "simplex-pivots") return SmoothedMeasure::simplex_pivots;
  if (s == "perceptron_iterations" || s == "perceptron-iterations") return SmoothedMeasure::perceptron_iterations;
  fail(ErrorKind::invalid_input, "unknown measure '" + std::string(s) + "'");
}

enum class OutputFormat { csv, json };

inline OutputFormat parse_format(std::string_view s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  fail(ErrorKind::invalid_input, "format must be csv or json, got '" + std::string(s) + "'");
}

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::matrix_tail;
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> sigma_grid;
  std::vector<double> thresholds;
  std::size_t trials = 1000;
  std::uint64_t master_seed = 0;
  // Preset names (zero, ones, e1, klee-minty) or file paths. Only the
  // smoothed profile takes more than one.
  std::vector<std::string> centers{"zero"};
  bool per_trial = false;
  bool exhaustive = false;
  SelectionRule rule = SelectionRule::lowest_index;
  std::uint64_t iteration_cap = 1000000;
  SmoothedMeasure measure = SmoothedMeasure::simplex_pivots;

  // Execution settings; they never reach a report.
  std::size_t threads = 1;
  OutputFormat format = OutputFormat::csv;
  std::string output_path;
};

// ---------------------------------------------------------------------------
// Text conversions

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || s.empty())
    fail(ErrorKind::invalid_input, std::string(what) + ": '" + s + "' is not a number");
  if (!std::isfinite(v)) fail(ErrorKind::invalid_input, std::string(what) + " must be finite");
  return v;
}

inline std::uint64_t parse_uint(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || s.empty())
    fail(ErrorKind::invalid_input, std::string(what) + ": '" + s + "' is not a nonnegative integer");
  return v;
}

inline bool parse_bool(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  fail(ErrorKind::invalid_input, std::string(what) + ": '" + s + "' is not a boolean");
}

inline std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::size_t stop = comma == std::string_view::npos ? text.size() : comma;
    std::string item = trim(text.substr(start, stop - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::vector<double> parse_double_list(std::string_view text, std::string_view what) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_double(item, what));
  return out;
}

/// Keys accepted by apply_setting, both in config files and as flag names.
inline constexpr std::string_view kSettingKeys[] = {
    "n",          "d",    "sigma",   "threshold", "trials", "seed",   "center", "out",
    "format",     "per-trial", "threads", "rule", "exhaustive", "cap", "measure",
};

/// Sets one configuration field from its text form.
inline void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "n") {
    cfg.n = parse_uint(value, "n");
  } else if (key == "d") {
    cfg.d = parse_uint(value, "d");
  } else if (key == "sigma") {
    cfg.sigma_grid = parse_double_list(value, "sigma");
  } else if (key == "threshold") {
    cfg.thresholds = parse_double_list(value, "threshold");
  } else if (key == "trials") {
    cfg.trials = parse_uint(value, "trials");
  } else if (key == "seed") {
    cfg.master_seed = parse_uint(value, "seed");
  } else if (key == "center") {
    cfg.centers = split_list(value);
  } else if (key == "out") {
    cfg.output_path = trim(value);
  } else if (key == "format") {
    cfg.format = parse_format(trim(value));
  } else if (key == "per-trial" || key == "per_trial") {
    cfg.per_trial = parse_bool(value, "per-trial");
  } else if (key == "threads") {
    cfg.threads = parse_uint(value, "threads");
  } else if (key == "rule") {
    cfg.rule = parse_selection_rule(trim(value));
  } else if (key == "exhaustive") {
    cfg.exhaustive = parse_bool(value, "exhaustive");
  } else if (key == "cap") {
    cfg.iteration_cap = parse_uint(value, "cap");
  } else if (key == "measure") {
    cfg.measure = parse_measure(trim(value));
  } else {
    fail(ErrorKind::invalid_input, "unknown setting '" + std::string(key) + "'");
  }
}

/// Reads `key = value` lines. Blank lines and lines starting with '#' or ';'
/// are skipped; later keys override earlier ones.
inline std::vector<std::pair<std::string, std::string>> read_config_file(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::invalid_input, "config line " + std::to_string(lineno) + " has no '='");
    std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.size() > 2 && key.substr(0, 2) == "--") key = key.substr(2);
    out.emplace_back(std::move(key), trim(std::string_view(t).substr(eq + 1)));
  }
  return out;
}

inline std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::invalid_input, "cannot open config file '" + path + "'");
  return read_config_file(in);
}

// ---------------------------------------------------------------------------
// Centers

inline bool is_preset(std::string_view name) {
  return name == "zero" || name == "ones" || name == "e1" || name == "klee-minty";
}

/// d x d matrix text: "rows cols" then the entries row by row.
inline Matrix read_matrix(std::istream& in) {
  std::size_t r = 0, c = 0;
  require(static_cast<bool>(in >> r >> c), ErrorKind::invalid_input, "matrix header must be 'rows cols'");
  std::vector<double> e(r * c);
  for (double& x : e) require(static_cast<bool>(in >> x), ErrorKind::invalid_input, "matrix body too short");
  return Matrix(r, c, std::move(e));
}

inline std::ifstream open_center_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::invalid_input, "cannot open center file '" + path + "'");
  return in;
}

/// Matrix center for the Gaussian tail experiment. "ones" is the all-ones
/// (rank one, singular) matrix and "e1" has a single 1 in the corner.
inline Matrix matrix_center(const std::string& spec, std::size_t d) {
  if (spec == "zero") return Matrix::zeros(d, d);
  if (spec == "ones") return Matrix(d, d, std::vector<double>(d * d, 1.0));
  if (spec == "e1") {
    std::vector<double> e(d * d, 0.0);
    e[0] = 1.0;
    return Matrix(d, d, std::move(e));
  }
  if (spec == "klee-minty") fail(ErrorKind::invalid_input, "klee-minty is an LP center, not a matrix center");
  auto in = open_center_file(spec);
  Matrix m = read_matrix(in);
  require(m.rows() == d && m.cols() == d, ErrorKind::invalid_input,
          "center matrix in '" + spec + "' is not " + std::to_string(d) + " x " + std::to_string(d));
  return m;
}

/// Stretched Klee-Minty-style deformed cube: rows +-e_j - eps e_{j-1} scaled to
/// unit length, ordered (+e_1, -e_1, +e_2, -e_2, ...).
inline std::vector<Vector> klee_minty_rows(std::size_t d, double eps = 0.3) {
  std::vector<Vector> rows;
  for (std::size_t j = 0; j < d; ++j) {
    for (double s : {1.0, -1.0}) {
      std::vector<double> a(d, 0.0);
      a[j] = s;
      if (j > 0) a[j - 1] = -eps;
      const double len = std::sqrt(1.0 + (j > 0 ? eps * eps : 0.0));
      for (double& x : a) x /= len;
      rows.emplace_back(std::move(a));
    }
  }
  return rows;
}

/// n centers in R^d. "ones" is the unit vector (1, ..., 1)/sqrt(d) repeated;
/// "e1" repeats the first axis; a file holds "n d" and n rows.
inline std::vector<Vector> point_centers(const std::string& spec, std::size_t n, std::size_t d) {
  if (spec == "zero") return std::vector<Vector>(n, Vector::zeros(d));
  if (spec == "ones") return std::vector<Vector>(n, Vector(std::vector<double>(d, 1.0 / std::sqrt(double(d)))));
  if (spec == "e1") return std::vector<Vector>(n, Vector::unit(d, 0));
  if (spec == "klee-minty") {
    require(n == 2 * d, ErrorKind::invalid_input, "klee-minty centers need n = 2d");
    return klee_minty_rows(d);
  }
  auto in = open_center_file(spec);
  std::size_t fn = 0, fd = 0;
  require(static_cast<bool>(in >> fn >> fd), ErrorKind::invalid_input, "point file header must be 'n d'");
  require(fn == n && fd == d, ErrorKind::invalid_input, "points in '" + spec + "' do not match n and d");
  std::vector<Vector> pts;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> p(d);
    for (double& x : p) require(static_cast<bool>(in >> x), ErrorKind::invalid_input, "point file too short");
    pts.emplace_back(std::move(p));
  }
  return pts;
}

/// LP center {x : a_i^T x <= b_i} with objective z. Presets use b = 1 and
/// z = e_d for klee-minty, (1, ..., 1)/sqrt(d) otherwise.
inline LinearProgram lp_center(const std::string& spec, std::size_t n, std::size_t d) {
  if (is_preset(spec)) {
    Vector z = spec == "klee-minty" ? Vector::unit(d, d - 1)
                                    : Vector(std::vector<double>(d, 1.0 / std::sqrt(double(d))));
    return LinearProgram::unit_rhs(point_centers(spec, n, d), std::move(z));
  }
  auto in = open_center_file(spec);
  LinearProgram lp = read_linear_program(in);
  require(lp.n() == n && lp.d() == d, ErrorKind::invalid_input, "LP in '" + spec + "' does not match n and d");
  return lp;
}

namespace detail {

inline std::pair<std::size_t, std::size_t> file_shape(const std::string& path) {
  auto in = open_center_file(path);
  std::size_t a = 0, b = 0;
  require(static_cast<bool>(in >> a >> b), ErrorKind::invalid_input, "center file '" + path + "' has no header");
  return {a, b};
}

}  // namespace detail

/// Fills n and d from center files when they were left at zero and checks
/// that every other setting satisfies the experiment's invariants.
inline void resolve_and_validate(ExperimentConfig& cfg) {
  const ExperimentKind k = cfg.kind;
  require(cfg.trials >= 1, ErrorKind::invalid_input, "trials must be at least 1");
  require(!cfg.centers.empty(), ErrorKind::invalid_input, "at least one center is required");
  if (k != ExperimentKind::smoothed_profile)
    require(cfg.centers.size() == 1, ErrorKind::invalid_input, "this experiment takes exactly one center");

  for (const auto& c : cfg.centers) {
    if (is_preset(c)) continue;
    const auto [a, b] = detail::file_shape(c);
    if (k == ExperimentKind::matrix_tail) {
      if (cfg.d == 0) cfg.d = a;
    } else {
      if (cfg.n == 0) cfg.n = a;
      if (cfg.d == 0) cfg.d = b;
    }
  }
  if (k == ExperimentKind::rademacher_tail)
    require(cfg.centers.front() == "zero", ErrorKind::invalid_input, "sign matrices take no center");

  require(cfg.d >= 1, ErrorKind::invalid_input, "--d is required and must be at least 1");
  const bool needs_n = k != ExperimentKind::matrix_tail && k != ExperimentKind::rademacher_tail;
  if (needs_n) require(cfg.n >= 1, ErrorKind::invalid_input, "--n is required and must be at least 1");

  const bool tail = k == ExperimentKind::matrix_tail || k == ExperimentKind::rademacher_tail ||
                    k == ExperimentKind::perceptron_tail;
  if (tail) {
    require(!cfg.thresholds.empty(), ErrorKind::invalid_input, "at least one --threshold is required");
    for (double t : cfg.thresholds) require(t > 0.0, ErrorKind::invalid_input, "thresholds must be positive");
  }
  if (k != ExperimentKind::rademacher_tail) {
    require(!cfg.sigma_grid.empty(), ErrorKind::invalid_input, "at least one --sigma is required");
    const bool zero_ok = k == ExperimentKind::simplex_pivots || k == ExperimentKind::smoothed_profile;
    for (double s : cfg.sigma_grid) {
      if (zero_ok)
        require(s >= 0.0, ErrorKind::invalid_input, "sigma must be nonnegative");
      else
        require(s > 0.0, ErrorKind::invalid_input, "sigma must be positive");
    }
  }
  if (k == ExperimentKind::rademacher_tail && cfg.exhaustive)
    require(cfg.d * cfg.d <= 20, ErrorKind::size_limit, "exhaustive sign enumeration needs d^2 <= 20");
  require(cfg.iteration_cap >= 1, ErrorKind::invalid_input, "cap must be at least 1");
}

}  // namespace smoothlab::lab
