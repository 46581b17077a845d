#pragma once

// LP data model (maximize z^T x subject to a_i^T x <= b_i), brute-force vertex
// enumeration, the brute-force optimum oracle and exact shadow polygons.
//
// Everything in this header is deliberately brute force: it is the reference
// the pivoting code is checked against, so it never shares the pivot logic.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "smoothlab/combinatorics.hpp"
#include "smoothlab/error.hpp"
#include "smoothlab/numkit.hpp"
#include "smoothlab/perturb.hpp"
#include "smoothlab/text_io.hpp"

namespace smoothlab {

/// Absolute tolerance on constraint residuals.
inline constexpr double kFeasibilityTol = 1e-9;
/// Two basic solutions closer than this are the same point (degeneracy).
inline constexpr double kCoincidenceTol = 1e-7;
/// Sine tolerance for collinearity in the 2D hull and for plane degeneracy.
inline constexpr double kCollinearTol = 1e-9;
/// Default cap on the number of d-subsets examined by brute force.
inline constexpr double kDefaultSubsetBudget = 1e6;

struct LinearProgram {
  std::vector<Vector> rows;  // a_i
  std::vector<double> rhs;   // b_i
  Vector objective;          // z

  std::size_t n() const noexcept { return rows.size(); }
  std::size_t d() const noexcept { return objective.dim(); }

  void validate() const {
    require(!rows.empty(), ErrorKind::invalid_input, "linear program needs at least one constraint");
    require(objective.dim() >= 1, ErrorKind::invalid_input, "linear program needs d >= 1");
    require(rhs.size() == rows.size(), ErrorKind::invalid_input, "rhs length differs from row count");
    for (const auto& r : rows)
      require(r.dim() == objective.dim(), ErrorKind::invalid_input, "constraint row dimension mismatch");
    for (double b : rhs) require(std::isfinite(b), ErrorKind::invalid_input, "non-finite rhs");
  }

  /// The polytope {x : a_i^T x <= 1}.
  static LinearProgram unit_rhs(std::vector<Vector> rows, Vector objective) {
    LinearProgram lp{std::move(rows), {}, std::move(objective)};
    lp.rhs.assign(lp.rows.size(), 1.0);
    return lp;
  }
};

struct PolytopeVertex {
  Vector point;
  std::vector<std::size_t> tight_set;  // sorted, d entries

  friend bool operator==(const PolytopeVertex&, const PolytopeVertex&) = default;
};

inline double slack(const LinearProgram& lp, std::size_t i, std::span<const double> x) {
  return lp.rhs[i] - dot(lp.rows[i].entries(), x);
}

inline bool is_feasible(const LinearProgram& lp, std::span<const double> x, double tol = kFeasibilityTol) {
  for (std::size_t i = 0; i < lp.n(); ++i)
    if (slack(lp, i, x) < -tol) return false;
  return true;
}

/// Solution of a_i^T x = b_i for i in `subset` (|subset| = d), or nullopt
/// when those rows are linearly dependent.
inline std::optional<std::vector<double>> basic_solution(const LinearProgram& lp,
                                                         std::span<const std::size_t> subset) {
  const std::size_t d = lp.d();
  std::vector<double> a(d * d);
  std::vector<double> b(d);
  for (std::size_t k = 0; k < d; ++k) {
    const auto& row = lp.rows[subset[k]];
    std::copy(row.begin(), row.end(), a.begin() + static_cast<std::ptrdiff_t>(k * d));
    b[k] = lp.rhs[subset[k]];
  }
  return solve_square(d, std::move(a), std::move(b));
}

/// Checks the vertex invariants: d distinct sorted indices, independent rows,
/// equality on the tight set and feasibility elsewhere.
inline bool is_vertex(const LinearProgram& lp, const PolytopeVertex& v) {
  const std::size_t d = lp.d();
  if (v.point.dim() != d || v.tight_set.size() != d) return false;
  if (!std::is_sorted(v.tight_set.begin(), v.tight_set.end())) return false;
  if (std::adjacent_find(v.tight_set.begin(), v.tight_set.end()) != v.tight_set.end()) return false;
  for (std::size_t i : v.tight_set) {
    if (i >= lp.n()) return false;
    if (std::abs(slack(lp, i, v.point.entries())) > kFeasibilityTol) return false;
  }
  if (!basic_solution(lp, v.tight_set)) return false;
  return is_feasible(lp, v.point.entries());
}

struct VertexEnumeration {
  std::vector<PolytopeVertex> vertices;  // sorted by tight_set
  /// Pairs (kept tight set, dropped tight set) whose basic solutions coincide
  /// within kCoincidenceTol: the polytope is degenerate there.
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> coincident;
  std::size_t subsets_examined = 0;
};

inline void check_subset_budget(std::size_t n, std::size_t k, double budget) {
  require(binomial(n, k) <= budget, ErrorKind::size_limit,
          "C(" + std::to_string(n) + "," + std::to_string(k) + ") exceeds the brute-force budget");
}

/// Every feasible basic solution, once. When several tight sets give the
/// same point the lexicographically first is kept and the rest are logged.
inline VertexEnumeration enumerate_vertices_detailed(const LinearProgram& lp,
                                                     double budget = kDefaultSubsetBudget) {
  lp.validate();
  const std::size_t d = lp.d();
  VertexEnumeration out;
  if (lp.n() < d) return out;
  check_subset_budget(lp.n(), d, budget);

  for_each_combination(lp.n(), d, [&](const std::vector<std::size_t>& subset) {
    ++out.subsets_examined;
    auto x = basic_solution(lp, subset);
    if (!x || !is_feasible(lp, *x)) return true;
    for (const auto& existing : out.vertices) {
      double diff = 0.0;
      for (std::size_t k = 0; k < d; ++k) diff = std::max(diff, std::abs(existing.point[k] - (*x)[k]));
      if (diff <= kCoincidenceTol) {
        out.coincident.emplace_back(existing.tight_set, subset);
        return true;
      }
    }
    out.vertices.push_back({Vector(std::move(*x)), subset});
    return true;
  });
  return out;
}

inline std::vector<PolytopeVertex> enumerate_vertices(const LinearProgram& lp,
                                                      double budget = kDefaultSubsetBudget) {
  return enumerate_vertices_detailed(lp, budget).vertices;
}

// ---------------------------------------------------------------------------
// Row-space reduction. A polyhedron {Ax <= b} whose rows do not span R^d
// contains lines (its lineality space is null(A)); restricting x to the row
// space yields a pointed polyhedron with the same projection data.

struct RowSpaceReduction {
  std::size_t rank = 0;
  bool identity = false;            // rows already span R^d; `reduced` is the input
  std::vector<Vector> basis;        // orthonormal basis of the row space (rank vectors)
  std::vector<Vector> null_basis;   // orthonormal basis of the lineality space
  LinearProgram reduced;            // LP in row-space coordinates (valid when rank > 0)

  /// Maps reduced coordinates y back to x = sum_k y_k basis_k.
  Vector lift(std::span<const double> y) const {
    if (identity) return Vector(std::vector<double>(y.begin(), y.end()));
    const std::size_t d = basis.empty() ? null_basis.front().dim() : basis.front().dim();
    std::vector<double> x(d, 0.0);
    for (std::size_t k = 0; k < rank; ++k)
      for (std::size_t i = 0; i < d; ++i) x[i] += y[k] * basis[k][i];
    return Vector(std::move(x));
  }

  std::vector<double> project(std::span<const double> x) const {
    if (identity) return {x.begin(), x.end()};
    std::vector<double> y(rank);
    for (std::size_t k = 0; k < rank; ++k) y[k] = dot(basis[k].entries(), x);
    return y;
  }
};

inline RowSpaceReduction reduce_to_row_space(const LinearProgram& lp) {
  lp.validate();
  const std::size_t d = lp.d();
  const JacobiSvd svd = jacobi_svd(Matrix::from_rows(lp.rows));
  const double tol = 1e-10 * std::max(svd.all_values.front(), 1e-300);

  RowSpaceReduction red;
  for (std::size_t k = 0; k < d; ++k) {
    if (svd.all_values[k] > tol && svd.all_values.front() > 0.0)
      red.basis.push_back(svd.right_vector(k));
    else
      red.null_basis.push_back(svd.right_vector(k));
  }
  red.rank = red.basis.size();
  if (red.rank == d) {
    red.identity = true;
    red.basis.clear();
    red.reduced = lp;
    return red;
  }
  if (red.rank == 0) return red;

  std::vector<Vector> rows;
  rows.reserve(lp.n());
  for (const auto& a : lp.rows) rows.emplace_back(red.project(a.entries()));
  red.reduced = LinearProgram{std::move(rows), lp.rhs, Vector(red.project(lp.objective.entries()))};
  return red;
}

/// Extreme rays (unit vectors) of the recession cone {w : A w <= 0} of a
/// polyhedron whose rows span R^d. Empty iff the polyhedron is bounded.
inline std::vector<Vector> extreme_rays(const LinearProgram& pointed, double budget = kDefaultSubsetBudget) {
  const std::size_t d = pointed.d();
  std::vector<Vector> candidates;
  if (d == 1) {
    candidates = {Vector{1.0}, Vector{-1.0}};
  } else {
    check_subset_budget(pointed.n(), d - 1, budget);
    for_each_combination(pointed.n(), d - 1, [&](const std::vector<std::size_t>& subset) {
      std::vector<Vector> sub;
      for (std::size_t i : subset) sub.push_back(pointed.rows[i]);
      const JacobiSvd svd = jacobi_svd(Matrix::from_rows(sub));
      // Rank d-1 leaves exactly one null direction, the last right vector.
      if (svd.all_values[d - 2] <= 1e-10 * svd.all_values.front()) return true;
      const Vector w = normalized(svd.right_vector(d - 1));
      candidates.push_back(w);
      candidates.push_back(-1.0 * w);
      return true;
    });
  }

  std::vector<Vector> rays;
  for (const auto& w : candidates) {
    bool in_cone = true;
    for (const auto& a : pointed.rows)
      if (dot(a, w) > kFeasibilityTol * std::max(1.0, norm(a))) {
        in_cone = false;
        break;
      }
    if (in_cone) rays.push_back(w);
  }
  return rays;
}

/// True when {Ax <= b} is empty or contains no ray.
inline bool is_bounded(const LinearProgram& lp, double budget = kDefaultSubsetBudget) {
  const RowSpaceReduction red = reduce_to_row_space(lp);
  if (red.rank < lp.d()) {
    // Lines inside the polyhedron unless it is empty.
    if (red.rank == 0) return std::any_of(lp.rhs.begin(), lp.rhs.end(), [](double b) { return b < -kFeasibilityTol; });
    return enumerate_vertices(red.reduced, budget).empty();
  }
  if (enumerate_vertices(lp, budget).empty()) return true;
  return extreme_rays(lp, budget).empty();
}

// ---------------------------------------------------------------------------
// Brute-force optimum

enum class LpStatus { optimal, unbounded, infeasible };

inline std::string_view to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

struct LpOutcome {
  LpStatus status = LpStatus::infeasible;
  std::optional<Vector> point;            // optimal point
  double value = 0.0;                     // z^T point when optimal
  std::vector<std::size_t> tight_set;     // defining constraints of the optimum (rank of them)
  std::optional<Vector> ray;              // improving recession direction when unbounded
};

/// Reference answer by enumerating every basic solution. Lines in the
/// polyhedron are factored out first, so rank-deficient programs (fewer
/// independent rows than d) are handled too.
inline LpOutcome brute_force_optimum(const LinearProgram& lp, double budget = kDefaultSubsetBudget) {
  lp.validate();
  const double znorm = norm(lp.objective);
  const RowSpaceReduction red = reduce_to_row_space(lp);
  LpOutcome out;

  if (red.rank == 0) {
    if (std::any_of(lp.rhs.begin(), lp.rhs.end(), [](double b) { return b < -kFeasibilityTol; })) return out;
    if (znorm > 0.0) {
      out.status = LpStatus::unbounded;
      out.ray = normalized(lp.objective);
      return out;
    }
    out.status = LpStatus::optimal;
    out.point = Vector::zeros(lp.d());
    return out;
  }

  const LinearProgram& pointed = red.reduced;
  const std::vector<PolytopeVertex> vertices = enumerate_vertices(pointed, budget);
  if (vertices.empty()) return out;

  // Objective component along the lineality space.
  if (!red.identity) {
    std::vector<double> along(lp.d(), 0.0);
    for (const auto& nb : red.null_basis) {
      const double c = dot(nb, lp.objective);
      for (std::size_t i = 0; i < lp.d(); ++i) along[i] += c * nb[i];
    }
    if (norm(along) > 1e-10 * std::max(1.0, znorm)) {
      out.status = LpStatus::unbounded;
      out.ray = normalized(Vector(std::move(along)));
      return out;
    }
  }

  for (const auto& w : extreme_rays(pointed, budget)) {
    if (dot(pointed.objective, w) > 1e-9 * std::max(1.0, znorm)) {
      out.status = LpStatus::unbounded;
      out.ray = red.lift(w.entries());
      return out;
    }
  }

  const PolytopeVertex* best = &vertices.front();
  double best_value = dot(pointed.objective, best->point);
  for (const auto& v : vertices) {
    const double value = dot(pointed.objective, v.point);
    if (value > best_value) {
      best_value = value;
      best = &v;
    }
  }
  out.status = LpStatus::optimal;
  out.point = red.lift(best->point.entries());
  out.value = dot(lp.objective, *out.point);
  out.tight_set = best->tight_set;
  return out;
}

// ---------------------------------------------------------------------------
// Shadow polygons

using Point2 = std::array<double, 2>;

/// Orthonormal basis (u, v) of span(t, z) with u along t.
struct ProjectionPlane {
  Vector t;
  Vector z;
  Vector u;
  Vector v;

  Point2 project(std::span<const double> x) const { return {dot(u.entries(), x), dot(v.entries(), x)}; }
};

inline ProjectionPlane make_plane(const Vector& t, const Vector& z) {
  require(t.dim() == z.dim(), ErrorKind::invalid_input, "plane vectors differ in dimension");
  const double tn = norm(t);
  const double zn = norm(z);
  if (tn == 0.0 || zn == 0.0) fail(ErrorKind::degenerate_plane, "plane vector is zero");
  Vector u = (1.0 / tn) * t;
  Vector rest = z - dot(z, u) * u;
  const double sine = norm(rest) / zn;
  if (sine < kCollinearTol) fail(ErrorKind::degenerate_plane, "t and z are parallel");
  return {t, z, std::move(u), normalized(rest)};
}

inline double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

/// Indices (into `points`) of the strictly convex hull, counterclockwise,
/// starting at the lexicographically smallest point. Points coinciding within
/// `merge_tol` are merged into the first one in (x, y, index) order.
inline std::vector<std::size_t> convex_hull_2d(std::span<const Point2> points, double merge_tol = 1e-9) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a] != points[b]) return points[a] < points[b];
    return a < b;
  });

  double scale = 1.0;
  for (const auto& p : points) scale = std::max({scale, std::abs(p[0]), std::abs(p[1])});
  std::vector<std::size_t> unique;
  for (std::size_t idx : order) {
    bool dup = false;
    for (std::size_t u : unique)
      if (std::abs(points[u][0] - points[idx][0]) <= merge_tol * scale &&
          std::abs(points[u][1] - points[idx][1]) <= merge_tol * scale) {
        dup = true;
        break;
      }
    if (!dup) unique.push_back(idx);
  }
  if (unique.size() < 3) return unique;

  auto turns_left = [&](std::size_t o, std::size_t a, std::size_t b) {
    const Point2& po = points[o];
    const Point2& pa = points[a];
    const Point2& pb = points[b];
    const double la = std::hypot(pa[0] - po[0], pa[1] - po[1]);
    const double lb = std::hypot(pb[0] - po[0], pb[1] - po[1]);
    return cross(po, pa, pb) > kCollinearTol * la * lb;
  };

  std::vector<std::size_t> hull(2 * unique.size());
  std::size_t k = 0;
  for (std::size_t idx : unique) {
    while (k >= 2 && !turns_left(hull[k - 2], hull[k - 1], idx)) --k;
    hull[k++] = idx;
  }
  for (std::size_t i = unique.size() - 1, lower = k + 1; i-- > 0;) {
    const std::size_t idx = unique[i];
    while (k >= lower && !turns_left(hull[k - 2], hull[k - 1], idx)) --k;
    hull[k++] = idx;
  }
  hull.resize(k - 1);
  return hull;
}

struct ShadowPolygon {
  ProjectionPlane plane;
  std::vector<Point2> hull_points;         // counterclockwise
  std::vector<PolytopeVertex> preimages;   // one per hull point
  std::size_t polytope_vertex_count = 0;
  /// Polytope vertices whose projection coincides with another vertex's.
  std::size_t projection_collisions = 0;

  std::size_t vertex_count() const noexcept { return hull_points.size(); }

  /// Distance from `p` to the nearest hull vertex.
  double distance_to_hull_vertex(const Point2& p) const {
    double best = kInfinity;
    for (const auto& h : hull_points) best = std::min(best, std::hypot(h[0] - p[0], h[1] - p[1]));
    return best;
  }
};

/// Exact projection of {x : a_i^T x <= b_i} onto span(t, z): project every
/// vertex, then take the 2D hull.
inline ShadowPolygon shadow_polygon(const LinearProgram& lp, const Vector& plane_t, const Vector& plane_z,
                                    double budget = kDefaultSubsetBudget) {
  lp.validate();
  require(plane_t.dim() == lp.d() && plane_z.dim() == lp.d(), ErrorKind::invalid_input,
          "plane vectors must live in R^d");
  ShadowPolygon shadow{make_plane(plane_t, plane_z), {}, {}, 0, 0};
  const ProjectionPlane& plane = shadow.plane;

  const RowSpaceReduction red = reduce_to_row_space(lp);
  for (const auto& line : red.null_basis) {
    const Point2 p = plane.project(line.entries());
    if (std::hypot(p[0], p[1]) > kCollinearTol) fail(ErrorKind::unbounded_shadow, "polytope contains a line");
  }
  if (red.rank == 0) {
    fail(ErrorKind::unbounded_shadow, "constraint rows are all zero");
  }

  const std::vector<PolytopeVertex> vertices = enumerate_vertices(red.reduced, budget);
  if (vertices.empty()) return shadow;  // empty polytope, empty shadow

  for (const auto& w : extreme_rays(red.reduced, budget)) {
    const Vector lifted = red.lift(w.entries());
    const Point2 p = plane.project(lifted.entries());
    if (std::hypot(p[0], p[1]) > kCollinearTol) fail(ErrorKind::unbounded_shadow, "shadow is unbounded");
  }

  std::vector<PolytopeVertex> lifted;
  std::vector<Point2> projected;
  lifted.reserve(vertices.size());
  for (const auto& v : vertices) {
    PolytopeVertex x{red.lift(v.point.entries()), v.tight_set};
    projected.push_back(plane.project(x.point.entries()));
    lifted.push_back(std::move(x));
  }
  shadow.polytope_vertex_count = lifted.size();

  const std::vector<std::size_t> hull = convex_hull_2d(projected);
  for (std::size_t idx : hull) {
    shadow.hull_points.push_back(projected[idx]);
    shadow.preimages.push_back(lifted[idx]);
    for (std::size_t j = 0; j < projected.size(); ++j)
      if (j != idx && std::hypot(projected[j][0] - projected[idx][0], projected[j][1] - projected[idx][1]) <=
                          1e-9 * std::max(1.0, std::hypot(projected[idx][0], projected[idx][1])))
        ++shadow.projection_collisions;
  }
  return shadow;
}

/// Shadow of {x : a_i^T x <= 1}.
inline ShadowPolygon shadow_polygon(std::span<const Vector> rows, const Vector& plane_t, const Vector& plane_z,
                                    double budget = kDefaultSubsetBudget) {
  require(!rows.empty(), ErrorKind::invalid_input, "no constraint rows");
  const LinearProgram lp = LinearProgram::unit_rhs({rows.begin(), rows.end()}, Vector::zeros(rows.front().dim()));
  return shadow_polygon(lp, plane_t, plane_z, budget);
}

/// Expected shadow size bound 58888678 n d^3 / sigma^6, valid for d >= 3,
/// n > d and 0 < sigma^2 <= 1 / (9 d ln n).
inline double shadow_size_bound(std::size_t n, std::size_t d, double sigma) {
  if (d < 3) fail(ErrorKind::out_of_regime, "shadow size bound needs d >= 3");
  if (n <= d) fail(ErrorKind::out_of_regime, "shadow size bound needs n > d");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(ErrorKind::out_of_regime, "shadow size bound needs sigma > 0");
  if (!in_shadow_regime(sigma, n, d)) fail(ErrorKind::out_of_regime, "sigma^2 exceeds 1/(9 d log n)");
  const double dd = static_cast<double>(d);
  return 58888678.0 * static_cast<double>(n) * dd * dd * dd / std::pow(sigma, 6);
}

// ---------------------------------------------------------------------------
// Plain-text LP fixtures: "n d", n lines "a_i1 .. a_id b_i", one line "z_1 .. z_d".

inline LinearProgram read_linear_program(std::istream& in) {
  std::size_t n = 0, d = 0;
  if (!(in >> n >> d) || n == 0 || d == 0) fail(ErrorKind::invalid_input, "LP header must be 'n d' with n, d >= 1");
  LinearProgram lp;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> a(d);
    for (double& x : a)
      if (!(in >> x)) fail(ErrorKind::invalid_input, "truncated LP constraint row " + std::to_string(i));
    double b = 0.0;
    if (!(in >> b)) fail(ErrorKind::invalid_input, "missing rhs on LP row " + std::to_string(i));
    lp.rows.emplace_back(std::move(a));
    lp.rhs.push_back(b);
  }
  std::vector<double> z(d);
  for (double& x : z)
    if (!(in >> x)) fail(ErrorKind::invalid_input, "truncated LP objective");
  lp.objective = Vector(std::move(z));
  std::string extra;
  if (in >> extra) fail(ErrorKind::invalid_input, "trailing data after LP objective");
  lp.validate();
  return lp;
}

inline void write_linear_program(std::ostream& out, const LinearProgram& lp) {
  out << lp.n() << ' ' << lp.d() << '\n';
  for (std::size_t i = 0; i < lp.n(); ++i) {
    for (double x : lp.rows[i]) out << format_double(x) << ' ';
    out << format_double(lp.rhs[i]) << '\n';
  }
  for (std::size_t k = 0; k < lp.d(); ++k) out << (k ? " " : "") << format_double(lp.objective[k]);
  out << '\n';
}

}  // namespace smoothlab
