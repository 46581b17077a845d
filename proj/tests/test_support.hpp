#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <cmath>
#include <cstddef>
#include <vector>

#include "smoothlab/polytope_lp.hpp"

namespace smoothlab::testing {

/// |x_k| <= 1 for every k, rows ordered (+e_1, -e_1, +e_2, -e_2, ...).
inline LinearProgram unit_box(std::size_t d, Vector objective) {
  std::vector<Vector> rows;
  for (std::size_t k = 0; k < d; ++k) {
    rows.push_back(Vector::unit(d, k));
    rows.push_back(-1.0 * Vector::unit(d, k));
  }
  return LinearProgram::unit_rhs(std::move(rows), std::move(objective));
}

inline std::vector<Vector> unit_box_rows(std::size_t d) { return unit_box(d, Vector::zeros(d)).rows; }

/// Number of points that are the unique maximizer of <p, (cos a, sin a)> for
/// some of `directions` evenly spaced angles. Independent of the hull code.
inline std::size_t count_extreme_by_directions(const std::vector<Point2>& pts, int directions = 36000) {
  std::vector<bool> extreme(pts.size(), false);
  for (int k = 0; k < directions; ++k) {
    const double a = 2.0 * M_PI * (k + 0.5) / directions;
    const double c = std::cos(a), s = std::sin(a);
    std::size_t best = 0;
    double best_v = -1e300, second = -1e300;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double v = pts[i][0] * c + pts[i][1] * s;
      if (v > best_v) {
        second = best_v;
        best_v = v;
        best = i;
      } else if (v > second) {
        second = v;
      }
    }
    if (best_v - second > 1e-9) extreme[best] = true;
  }
  std::size_t count = 0;
  for (bool e : extreme) count += e;
  return count;
}

}  // namespace smoothlab::testing
