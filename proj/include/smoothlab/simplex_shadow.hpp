#pragma once

// Shadow-vertex simplex method.
//
// Phase II sweeps the objective q(lambda) = (1 - lambda) t + lambda z from
// lambda = 0 to 1. At a vertex with tight set B the multipliers
// y(lambda) = A_B^{-T} q(lambda) are affine in lambda; the vertex stays
// q(lambda)-optimal while y(lambda) >= 0. At the first lambda where some y_j
// reaches zero, constraint B_j leaves, we follow the edge on which the rest
// of B stays tight, and a ratio test picks the entering constraint. The
// vertices visited are exactly the preimages of consecutive vertices of the
// shadow of the polytope on span(t, z).
//
// Phase I is a brute-force scan: the first feasible basic solution in
// lexicographic tight-set order, paired with t = sum of its tight rows, which
// certifies that it is t-optimal.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "smoothlab/combinatorics.hpp"
#include "smoothlab/error.hpp"
#include "smoothlab/numkit.hpp"
#include "smoothlab/polytope_lp.hpp"

namespace smoothlab {

/// Two ratio-test or multiplier candidates within this distance tie.
inline constexpr double kPivotTieTol = 1e-9;

enum class WalkOutcome { optimal, unbounded, phase1_failed };

inline std::string_view to_string(WalkOutcome o) {
  switch (o) {
    case WalkOutcome::optimal: return "optimal";
    case WalkOutcome::unbounded: return "unbounded";
    case WalkOutcome::phase1_failed: return "phase1_failed";
  }
  return "unknown";
}

struct PivotTrace {
  std::vector<PolytopeVertex> visited;
  std::vector<double> lambda_breakpoints;  // lambda at which each pivot happened
  std::size_t pivot_count = 0;
  WalkOutcome outcome = WalkOutcome::phase1_failed;
  std::optional<Vector> unbounded_ray;      // improving edge direction when unbounded
  bool degenerate = false;                  // a tie or zero-length step occurred
  std::vector<std::string> degeneracy_log;
};

namespace detail {

struct Basis {
  std::size_t d = 0;
  std::vector<double> rows;  // A_B, row-major

  Basis(const LinearProgram& lp, std::span<const std::size_t> tight) : d(lp.d()), rows(d * d) {
    for (std::size_t k = 0; k < d; ++k)
      std::copy(lp.rows[tight[k]].begin(), lp.rows[tight[k]].end(), rows.begin() + static_cast<std::ptrdiff_t>(k * d));
  }

  std::vector<double> transposed() const {
    std::vector<double> t(d * d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) t[j * d + i] = rows[i * d + j];
    return t;
  }

  /// y with A_B^T y = q.
  std::optional<std::vector<double>> multipliers(std::span<const double> q) const {
    return solve_square(d, transposed(), {q.begin(), q.end()});
  }

  /// w with A_B w = rhs.
  std::optional<std::vector<double>> solve(std::vector<double> rhs) const { return solve_square(d, rows, std::move(rhs)); }
};

inline std::size_t pivot_cap(const LinearProgram& lp) {
  return static_cast<std::size_t>(std::min(binomial(lp.n(), lp.d()), 1e6)) + 16;
}

}  // namespace detail

/// Walks from `start` (optimal for `start_objective`) to the lp.objective
/// optimum along the shadow on span(start_objective, lp.objective).
inline PivotTrace shadow_pivot_walk(const LinearProgram& lp, const PolytopeVertex& start, const Vector& start_objective) {
  lp.validate();
  const std::size_t d = lp.d();
  require(start_objective.dim() == d, ErrorKind::invalid_input, "start objective must live in R^d");
  if (!is_vertex(lp, start)) fail(ErrorKind::invalid_start, "start is not a vertex of the polytope");

  const auto& t = start_objective.values();
  const auto& z = lp.objective.values();
  const double yscale = std::max({1.0, norm(t), norm(z)});

  PivotTrace trace;
  std::vector<std::size_t> tight = start.tight_set;
  std::vector<double> x(start.point.begin(), start.point.end());
  trace.visited.push_back(start);

  {
    const auto yt = detail::Basis(lp, tight).multipliers(t);
    if (!yt) fail(ErrorKind::invalid_start, "start tight set is singular");
    for (double y : *yt)
      if (y < -kPivotTieTol * yscale) fail(ErrorKind::invalid_start, "start is not optimal for the start objective");
  }

  double lambda = 0.0;
  const std::size_t cap = detail::pivot_cap(lp);
  while (true) {
    const detail::Basis basis(lp, tight);
    const auto yt = basis.multipliers(t);
    const auto yz = basis.multipliers(z);
    if (!yt || !yz) fail(ErrorKind::numerical, "basis became singular during the walk");

    // Largest lambda for which the current tight set stays optimal.
    std::optional<std::size_t> leave;
    double leave_lambda = 1.0;
    std::vector<std::size_t> tied;
    for (std::size_t j = 0; j < d; ++j) {
      const double slope = (*yz)[j] - (*yt)[j];
      if (!(slope < 0.0)) continue;
      const double lj = std::max(lambda, (*yt)[j] / ((*yt)[j] - (*yz)[j]));
      if (lj >= 1.0) continue;
      if (!leave || lj < leave_lambda - kPivotTieTol) {
        leave = j;
        leave_lambda = lj;
        tied.clear();
      } else if (lj <= leave_lambda + kPivotTieTol) {
        tied.push_back(j);  // tight is sorted, so the earlier j has the smaller index
      }
    }
    if (!leave) {
      trace.outcome = WalkOutcome::optimal;
      break;
    }
    if (!tied.empty()) {
      trace.degenerate = true;
      trace.degeneracy_log.push_back("multiplier tie at lambda=" + std::to_string(leave_lambda));
    }
    lambda = leave_lambda;

    // Edge on which every tight constraint but the leaving one stays tight.
    std::vector<double> e(d, 0.0);
    e[*leave] = -1.0;
    const auto dir = basis.solve(std::move(e));
    if (!dir) fail(ErrorKind::numerical, "edge direction solve failed");
    const double dnorm = norm(*dir);

    std::optional<std::size_t> enter;
    double step = kInfinity;
    bool ratio_tie = false;
    for (std::size_t i = 0; i < lp.n(); ++i) {
      if (std::binary_search(tight.begin(), tight.end(), i)) continue;
      const double rate = dot(lp.rows[i].entries(), *dir);
      if (rate <= 1e-12 * norm(lp.rows[i]) * dnorm) continue;
      const double s = std::max(0.0, slack(lp, i, x)) / rate;
      if (!enter || s < step - kPivotTieTol * std::max(1.0, step)) {
        enter = i;
        step = s;
        ratio_tie = false;
      } else if (s <= step + kPivotTieTol * std::max(1.0, step)) {
        ratio_tie = true;  // i > *enter, the smaller index is kept
      }
    }
    if (!enter) {
      trace.outcome = WalkOutcome::unbounded;
      trace.unbounded_ray = normalized(Vector(*dir));
      break;
    }
    if (ratio_tie) {
      trace.degenerate = true;
      trace.degeneracy_log.push_back("ratio-test tie entering constraint " + std::to_string(*enter));
    }
    if (step <= kPivotTieTol) {
      trace.degenerate = true;
      trace.degeneracy_log.push_back("zero-length pivot entering constraint " + std::to_string(*enter));
    }

    tight[*leave] = *enter;
    std::sort(tight.begin(), tight.end());
    auto fresh = basic_solution(lp, tight);
    if (!fresh) fail(ErrorKind::numerical, "pivot produced a singular tight set");
    x = std::move(*fresh);
    trace.visited.push_back({Vector(x), tight});
    trace.lambda_breakpoints.push_back(lambda);

    if (trace.visited.size() > cap) fail(ErrorKind::numerical, "pivot limit exceeded (cycling on a degenerate polytope)");
  }
  trace.pivot_count = trace.visited.size() - 1;
  return trace;
}

enum class Phase1Status { found, infeasible, not_pointed };

struct InitialVertex {
  Phase1Status status = Phase1Status::infeasible;
  std::optional<PolytopeVertex> vertex;
  std::optional<Vector> start_objective;  // sum of the tight rows
  std::size_t bases_examined = 0;
};

/// First feasible basic solution in lexicographic tight-set order. Programs
/// whose rows do not span R^d have no vertex and report not_pointed.
inline InitialVertex find_initial_vertex(const LinearProgram& lp, double budget = kDefaultSubsetBudget) {
  lp.validate();
  const std::size_t d = lp.d();
  InitialVertex out;
  if (lp.n() < d) {
    out.status = Phase1Status::not_pointed;
    return out;
  }
  if (const JacobiSvd svd = jacobi_svd(Matrix::from_rows(lp.rows));
      !(svd.all_values.back() > 1e-10 * svd.all_values.front())) {
    out.status = Phase1Status::not_pointed;
    return out;
  }
  check_subset_budget(lp.n(), d, budget);

  for_each_combination(lp.n(), d, [&](const std::vector<std::size_t>& subset) {
    ++out.bases_examined;
    auto x = basic_solution(lp, subset);
    if (!x || !is_feasible(lp, *x)) return true;
    std::vector<double> t(d, 0.0);
    for (std::size_t i : subset)
      for (std::size_t k = 0; k < d; ++k) t[k] += lp.rows[i][k];
    out.vertex = PolytopeVertex{Vector(std::move(*x)), subset};
    out.start_objective = Vector(std::move(t));
    out.status = Phase1Status::found;
    return false;
  });
  return out;
}

struct SolveResult {
  LpStatus status = LpStatus::infeasible;
  PivotTrace trace;                    // Phase II only
  std::optional<Vector> point;         // optimum when status is optimal
  double value = 0.0;
  std::optional<Vector> start_objective;  // the t of the Phase II plane
  std::optional<Vector> ray;           // improving direction when unbounded
  std::size_t phase1_bases_examined = 0;
  bool lineality_reduced = false;      // rows did not span R^d
};

/// Two-phase driver. Programs with lines in their feasible region are solved
/// in row-space coordinates and lifted back.
inline SolveResult solve(const LinearProgram& lp, double budget = kDefaultSubsetBudget) {
  lp.validate();
  const RowSpaceReduction red = reduce_to_row_space(lp);
  SolveResult result;
  result.lineality_reduced = !red.identity;

  if (red.rank == 0) {
    const bool feasible = std::none_of(lp.rhs.begin(), lp.rhs.end(), [](double b) { return b < -kFeasibilityTol; });
    if (!feasible) return result;
    if (norm(lp.objective) > 0.0) {
      result.status = LpStatus::unbounded;
      result.trace.outcome = WalkOutcome::unbounded;
      result.ray = normalized(lp.objective);
      return result;
    }
    result.status = LpStatus::optimal;
    result.trace.outcome = WalkOutcome::optimal;
    result.point = Vector::zeros(lp.d());
    return result;
  }

  const LinearProgram& pointed = red.reduced;
  const InitialVertex phase1 = find_initial_vertex(pointed, budget);
  result.phase1_bases_examined = phase1.bases_examined;
  if (phase1.status != Phase1Status::found) {
    result.trace.outcome = WalkOutcome::phase1_failed;
    return result;
  }
  result.start_objective = red.lift(phase1.start_objective->entries());

  if (!red.identity) {
    std::vector<double> along(lp.d(), 0.0);
    for (const auto& nb : red.null_basis) {
      const double c = dot(nb, lp.objective);
      for (std::size_t i = 0; i < lp.d(); ++i) along[i] += c * nb[i];
    }
    if (norm(along) > 1e-10 * std::max(1.0, norm(lp.objective))) {
      result.status = LpStatus::unbounded;
      result.trace.outcome = WalkOutcome::unbounded;
      result.trace.visited.push_back({red.lift(phase1.vertex->point.entries()), phase1.vertex->tight_set});
      result.ray = normalized(Vector(std::move(along)));
      return result;
    }
  }

  PivotTrace trace = shadow_pivot_walk(pointed, *phase1.vertex, *phase1.start_objective);
  if (!red.identity) {
    for (auto& v : trace.visited) v.point = red.lift(v.point.entries());
    if (trace.unbounded_ray) trace.unbounded_ray = red.lift(trace.unbounded_ray->entries());
  }
  result.trace = std::move(trace);
  if (result.trace.outcome == WalkOutcome::unbounded) {
    result.status = LpStatus::unbounded;
    result.ray = result.trace.unbounded_ray;
  } else {
    result.status = LpStatus::optimal;
    result.point = result.trace.visited.back().point;
    result.value = dot(lp.objective, *result.point);
  }
  return result;
}

}  // namespace smoothlab
