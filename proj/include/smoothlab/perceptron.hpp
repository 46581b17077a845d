#pragma once

// Perceptron algorithm, the wiggle-room margin nu and the bounds built on it.
//
// nu is computed as the distance from the origin to the convex hull of the
// normalized points a_i / ||a_i||: by minimax duality that distance equals
// max_{||x|| = 1} min_i <a_i, x> / ||a_i|| whenever the origin lies outside
// the hull. The minimum-norm point of the hull is found with Wolfe's
// active-set algorithm.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "smoothlab/error.hpp"
#include "smoothlab/numkit.hpp"
#include "smoothlab/perturb.hpp"
#include "smoothlab/text_io.hpp"

namespace smoothlab {

/// Origin closer than this to the hull of normalized points: margin is zero.
inline constexpr double kInfeasibleMarginTol = 1e-8;

struct PerceptronInstance {
  std::vector<Vector> points;

  PerceptronInstance() = default;

  explicit PerceptronInstance(std::vector<Vector> pts) : points(std::move(pts)) {
    require(!points.empty(), ErrorKind::invalid_input, "perceptron instance needs at least one point");
    const std::size_t d = points.front().dim();
    require(d >= 1, ErrorKind::invalid_input, "perceptron points need d >= 1");
    for (const auto& p : points) {
      require(p.dim() == d, ErrorKind::invalid_input, "perceptron point dimension mismatch");
      require(norm(p) > 0.0, ErrorKind::invalid_input, "perceptron points must be nonzero");
    }
  }

  std::size_t n() const noexcept { return points.size(); }
  std::size_t d() const noexcept { return points.empty() ? 0 : points.front().dim(); }
};

struct MinNormPoint {
  std::vector<double> point;
  std::vector<double> weights;  // convex weights, one per input point
  double gap = 0.0;             // ||x||^2 - min_i <x, p_i>
  int major_iterations = 0;
};

namespace detail {

/// Affine-hull minimizer: alpha with sum alpha = 1 minimizing ||sum alpha_k p_k||.
inline std::optional<std::vector<double>> affine_minimizer(const std::vector<std::vector<double>>& pts,
                                                           const std::vector<std::size_t>& active) {
  const std::size_t m = active.size();
  const std::size_t k = m + 1;
  std::vector<double> kkt(k * k, 0.0);
  std::vector<double> rhs(k, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) kkt[i * k + j] = dot(pts[active[i]], pts[active[j]]);
    kkt[i * k + m] = 1.0;
    kkt[m * k + i] = 1.0;
  }
  rhs[m] = 1.0;
  auto sol = solve_square(k, std::move(kkt), std::move(rhs), 1e-14);
  if (!sol) return std::nullopt;
  sol->resize(m);
  return sol;
}

inline std::vector<double> combine(const std::vector<std::vector<double>>& pts, const std::vector<std::size_t>& active,
                                   const std::vector<double>& w) {
  std::vector<double> x(pts.front().size(), 0.0);
  for (std::size_t a = 0; a < active.size(); ++a)
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += w[a] * pts[active[a]][i];
  return x;
}

}  // namespace detail

/// Wolfe's minimum-norm-point algorithm over conv(pts).
inline MinNormPoint min_norm_point(const std::vector<std::vector<double>>& pts, double gap_tol = 1e-15) {
  require(!pts.empty(), ErrorKind::invalid_input, "min_norm_point of an empty set");
  constexpr double weight_eps = 1e-12;
  constexpr int max_major = 10000;

  std::size_t first = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (dot(pts[i], pts[i]) < dot(pts[first], pts[first])) first = i;
  std::vector<std::size_t> active{first};
  std::vector<double> lam{1.0};
  std::vector<double> x = pts[first];

  MinNormPoint out;
  for (; out.major_iterations < max_major; ++out.major_iterations) {
    std::size_t j = 0;
    double best = kInfinity;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double v = dot(x, pts[i]);
      if (v < best) {
        best = v;
        j = i;
      }
    }
    const double xx = dot(x, x);
    out.gap = xx - best;
    if (out.gap <= gap_tol) break;
    if (std::find(active.begin(), active.end(), j) != active.end()) break;
    active.push_back(j);
    lam.push_back(0.0);

    bool stalled = false;
    while (true) {
      const auto alpha = detail::affine_minimizer(pts, active);
      if (!alpha) {
        stalled = true;
        break;
      }
      if (std::all_of(alpha->begin(), alpha->end(), [](double a) { return a > weight_eps; })) {
        lam = *alpha;
        break;
      }
      double theta = 1.0;
      for (std::size_t a = 0; a < active.size(); ++a)
        if ((*alpha)[a] <= weight_eps && lam[a] - (*alpha)[a] > 0.0)
          theta = std::min(theta, lam[a] / (lam[a] - (*alpha)[a]));
      for (std::size_t a = 0; a < active.size(); ++a) lam[a] = (1.0 - theta) * lam[a] + theta * (*alpha)[a];
      std::vector<std::size_t> keep_idx;
      std::vector<double> keep_lam;
      for (std::size_t a = 0; a < active.size(); ++a)
        if (lam[a] > weight_eps) {
          keep_idx.push_back(active[a]);
          keep_lam.push_back(lam[a]);
        }
      if (keep_idx.size() == active.size()) {
        // theta hit no weight exactly; drop the smallest to guarantee progress.
        const auto it = std::min_element(keep_lam.begin(), keep_lam.end());
        const auto pos = static_cast<std::size_t>(it - keep_lam.begin());
        keep_idx.erase(keep_idx.begin() + static_cast<std::ptrdiff_t>(pos));
        keep_lam.erase(keep_lam.begin() + static_cast<std::ptrdiff_t>(pos));
      }
      double total = 0.0;
      for (double l : keep_lam) total += l;
      for (double& l : keep_lam) l /= total;
      active = std::move(keep_idx);
      lam = std::move(keep_lam);
    }
    std::vector<double> next = detail::combine(pts, active, lam);
    if (stalled || dot(next, next) >= xx) {
      if (!stalled && dot(next, next) < xx) x = std::move(next);
      break;
    }
    x = std::move(next);
  }

  out.point = x;
  out.weights.assign(pts.size(), 0.0);
  for (std::size_t a = 0; a < active.size(); ++a) out.weights[active[a]] = lam[a];
  double best = kInfinity;
  for (const auto& p : pts) best = std::min(best, dot(x, p));
  out.gap = dot(x, x) - best;
  return out;
}

struct Margin {
  double nu = 0.0;             // 0 when the instance is not strictly feasible
  bool feasible = false;
  std::optional<Vector> direction;  // unit vector achieving nu
  double hull_distance = 0.0;
};

inline Margin wiggle_room_detail(const PerceptronInstance& inst) {
  require(inst.n() >= 1, ErrorKind::invalid_input, "wiggle_room needs at least one point");
  std::vector<std::vector<double>> unit;
  unit.reserve(inst.n());
  for (const auto& p : inst.points) {
    const double n = norm(p);
    require(n > 0.0, ErrorKind::invalid_input, "zero vector among perceptron points");
    std::vector<double> u(p.begin(), p.end());
    for (double& x : u) x /= n;
    unit.push_back(std::move(u));
  }
  const MinNormPoint mnp = min_norm_point(unit);
  Margin m;
  m.hull_distance = norm(mnp.point);
  if (m.hull_distance <= kInfeasibleMarginTol) return m;

  std::vector<double> dir = mnp.point;
  for (double& x : dir) x /= m.hull_distance;
  // Report the margin the direction certifiably achieves.
  double achieved = kInfinity;
  for (const auto& u : unit) achieved = std::min(achieved, dot(u, dir));
  if (achieved <= kInfeasibleMarginTol) return m;
  m.nu = achieved;
  m.feasible = true;
  m.direction = Vector(std::move(dir));
  return m;
}

/// Wiggle room: max over x in the feasible cone of min_i <a_i, x> / (||a_i|| ||x||).
inline double wiggle_room(const PerceptronInstance& inst) { return wiggle_room_detail(inst).nu; }

enum class SelectionRule { lowest_index, most_violated, random_violated };

inline std::string_view to_string(SelectionRule r) {
  switch (r) {
    case SelectionRule::lowest_index: return "lowest-index";
    case SelectionRule::most_violated: return "most-violated";
    case SelectionRule::random_violated: return "random-violated";
  }
  return "unknown";
}

inline SelectionRule parse_selection_rule(std::string_view s) {
  if (s == "lowest-index") return SelectionRule::lowest_index;
  if (s == "most-violated") return SelectionRule::most_violated;
  if (s == "random-violated") return SelectionRule::random_violated;
  fail(ErrorKind::invalid_input, "unknown selection rule '" + std::string(s) + "'");
}

enum class PerceptronStatus { solved, iteration_cap_reached };

inline std::string_view to_string(PerceptronStatus s) {
  return s == PerceptronStatus::solved ? "solved" : "iteration_cap_reached";
}

struct PerceptronRun {
  std::uint64_t iterations = 0;
  std::optional<Vector> final_x;
  PerceptronStatus status = PerceptronStatus::iteration_cap_reached;
};

/// x = 0; while some <a_i, x> <= 0, pick one by `rule` and add a_i / ||a_i||.
/// The seed only matters for random_violated.
inline PerceptronRun run_perceptron(const PerceptronInstance& inst, SeedSpec seed, std::uint64_t iteration_cap,
                                    SelectionRule rule = SelectionRule::lowest_index) {
  require(iteration_cap >= 1, ErrorKind::invalid_input, "iteration cap must be at least 1");
  require(inst.n() >= 1, ErrorKind::invalid_input, "empty perceptron instance");
  const std::size_t n = inst.n();
  const std::size_t d = inst.d();

  std::vector<std::vector<double>> unit(n);
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    norms[i] = norm(inst.points[i]);
    unit[i].assign(inst.points[i].begin(), inst.points[i].end());
    for (double& v : unit[i]) v /= norms[i];
  }

  RandomStream stream(seed);
  std::vector<double> x(d, 0.0);
  std::vector<std::size_t> violated;
  PerceptronRun run;
  while (true) {
    violated.clear();
    std::optional<std::size_t> pick;
    double worst = kInfinity;
    for (std::size_t i = 0; i < n; ++i) {
      const double ip = dot(inst.points[i].entries(), x);
      if (ip > 0.0) continue;
      violated.push_back(i);
      const double normalized_ip = ip / norms[i];
      if (normalized_ip < worst) {
        worst = normalized_ip;
        if (rule == SelectionRule::most_violated) pick = i;
      }
    }
    if (violated.empty()) {
      run.status = PerceptronStatus::solved;
      break;
    }
    if (run.iterations >= iteration_cap) {
      run.status = PerceptronStatus::iteration_cap_reached;
      break;
    }
    switch (rule) {
      case SelectionRule::lowest_index: pick = violated.front(); break;
      case SelectionRule::most_violated: break;
      case SelectionRule::random_violated:
        pick = violated[static_cast<std::size_t>(stream.uniform() * static_cast<double>(violated.size()))];
        break;
    }
    for (std::size_t k = 0; k < d; ++k) x[k] += unit[*pick][k];
    ++run.iterations;
  }
  run.final_x = Vector(std::move(x));
  return run;
}

/// ceil(1 / nu^2); values within 1e-9 relative of an integer round to it.
inline std::uint64_t iteration_bound(double nu) {
  if (!(nu > 0.0)) fail(ErrorKind::infeasible_margin, "iteration bound needs nu > 0");
  const double q = 1.0 / (nu * nu);
  if (q >= 1.8e19) return std::numeric_limits<std::uint64_t>::max();
  const double r = std::round(q);
  if (std::abs(q - r) <= 1e-9 * q) return static_cast<std::uint64_t>(r);
  return static_cast<std::uint64_t>(std::ceil(q));
}

/// True when sigma^2 < 1 / (2d), treating values within 1e-12 relative of the
/// boundary as on it.
inline bool in_perceptron_regime(double sigma, std::size_t d) {
  return sigma > 0.0 && sigma * sigma < (1.0 / (2.0 * static_cast<double>(d))) * (1.0 - 1e-12);
}

struct TailBound {
  double raw = 0.0;       // the formula as written
  double reported = 0.0;  // clamped to [0, 1]
  bool vacuous = false;   // raw >= 1, or the log factor is not positive
  bool log_nonpositive = false;
};

/// (n d^1.5 / (sigma t)) ln(sigma t / d^1.5), valid for sigma^2 < 1/(2d).
inline TailBound blum_dunagan_tail(std::size_t n, std::size_t d, double sigma, double t) {
  if (n < 1 || d < 1) fail(ErrorKind::out_of_regime, "blum_dunagan_tail needs n, d >= 1");
  if (!(t > 0.0) || !std::isfinite(t)) fail(ErrorKind::out_of_regime, "blum_dunagan_tail needs t > 0");
  if (!in_perceptron_regime(sigma, d)) fail(ErrorKind::out_of_regime, "sigma^2 must be below 1/(2d)");
  const double d15 = std::pow(static_cast<double>(d), 1.5);
  const double logf = std::log(sigma * t / d15);
  TailBound b;
  b.raw = static_cast<double>(n) * d15 / (sigma * t) * logf;
  b.log_nonpositive = logf <= 0.0;
  b.vacuous = b.log_nonpositive || b.raw >= 1.0;
  b.reported = std::clamp(b.raw, 0.0, 1.0);
  return b;
}

/// d^3 n^2 ln^2(n / delta) / (delta^2 sigma^2): iteration-count shape whose
/// constant is unspecified; experiments fit it, never assert it.
inline double perceptron_iteration_shape(std::size_t n, std::size_t d, double sigma, double delta) {
  require(delta > 0.0 && delta < 1.0, ErrorKind::invalid_input, "delta must lie in (0, 1)");
  require(sigma > 0.0, ErrorKind::invalid_input, "sigma must be positive");
  const double nd = static_cast<double>(n);
  const double dd = static_cast<double>(d);
  const double l = std::log(nd / delta);
  return dd * dd * dd * nd * nd * l * l / (delta * delta * sigma * sigma);
}

// Plain-text instance files: "n d", then n lines of d scalars.

inline PerceptronInstance read_perceptron_instance(std::istream& in) {
  std::size_t n = 0, d = 0;
  if (!(in >> n >> d) || n == 0 || d == 0)
    fail(ErrorKind::invalid_input, "instance header must be 'n d' with n, d >= 1");
  std::vector<Vector> pts;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> p(d);
    for (double& x : p)
      if (!(in >> x)) fail(ErrorKind::invalid_input, "truncated instance row " + std::to_string(i));
    pts.emplace_back(std::move(p));
  }
  std::string extra;
  if (in >> extra) fail(ErrorKind::invalid_input, "trailing data after instance rows");
  return PerceptronInstance(std::move(pts));
}

inline void write_perceptron_instance(std::ostream& out, const PerceptronInstance& inst) {
  out << inst.n() << ' ' << inst.d() << '\n';
  for (const auto& p : inst.points) {
    for (std::size_t k = 0; k < p.dim(); ++k) out << (k ? " " : "") << format_double(p[k]);
    out << '\n';
  }
}

}  // namespace smoothlab
