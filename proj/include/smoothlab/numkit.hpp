#pragma once

// Dense small-dimension linear algebra: norms, singular values, inverse norm,
// condition number, distances to spans and the height of a column set.
//
// Everything here is a pure function of its arguments. Dimensions are assumed
// to be small (tens), so the O(d^3) one-sided Jacobi SVD is used throughout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smoothlab/error.hpp"

namespace smoothlab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// sigma_min below this is treated as exact singularity.
inline constexpr double kSingularThreshold = 1e-300;

namespace detail {

inline bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace detail

/// Real vector with finite entries. Immutable once built.
class Vector {
 public:
  Vector() = default;

  explicit Vector(std::vector<double> entries) : entries_(std::move(entries)) {
    require(detail::all_finite(entries_), ErrorKind::invalid_input, "vector has non-finite entries");
  }

  Vector(std::initializer_list<double> entries) : Vector(std::vector<double>(entries)) {}

  static Vector zeros(std::size_t dim) { return Vector(std::vector<double>(dim, 0.0)); }

  static Vector unit(std::size_t dim, std::size_t axis) {
    std::vector<double> e(dim, 0.0);
    e.at(axis) = 1.0;
    return Vector(std::move(e));
  }

  std::size_t dim() const noexcept { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  std::span<const double> entries() const noexcept { return entries_; }
  const std::vector<double>& values() const noexcept { return entries_; }

  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> entries_;
};

/// Row-major real matrix with finite entries. Immutable once built.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
      : rows_(rows), cols_(cols), entries_(std::move(row_major)) {
    require(rows_ * cols_ == entries_.size(), ErrorKind::invalid_input,
            "matrix entry count does not match its shape");
    require(detail::all_finite(entries_), ErrorKind::invalid_input, "matrix has non-finite entries");
  }

  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    for (const auto& row : rows) {
      require(row.size() == cols_, ErrorKind::invalid_input, "ragged matrix literal");
      entries_.insert(entries_.end(), row.begin(), row.end());
    }
    require(detail::all_finite(entries_), ErrorKind::invalid_input, "matrix has non-finite entries");
  }

  static Matrix zeros(std::size_t rows, std::size_t cols) {
    return Matrix(rows, cols, std::vector<double>(rows * cols, 0.0));
  }

  static Matrix identity(std::size_t d) {
    std::vector<double> e(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) e[i * d + i] = 1.0;
    return Matrix(d, d, std::move(e));
  }

  static Matrix diagonal(std::span<const double> diag) {
    const std::size_t d = diag.size();
    std::vector<double> e(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) e[i * d + i] = diag[i];
    return Matrix(d, d, std::move(e));
  }

  /// Matrix whose j-th column is columns[j].
  static Matrix from_columns(std::span<const Vector> columns) {
    require(!columns.empty(), ErrorKind::invalid_input, "no columns given");
    const std::size_t rows = columns.front().dim();
    std::vector<double> e(rows * columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
      require(columns[j].dim() == rows, ErrorKind::invalid_input, "column dimension mismatch");
      for (std::size_t i = 0; i < rows; ++i) e[i * columns.size() + j] = columns[j][i];
    }
    return Matrix(rows, columns.size(), std::move(e));
  }

  static Matrix from_rows(std::span<const Vector> rows) {
    require(!rows.empty(), ErrorKind::invalid_input, "no rows given");
    const std::size_t cols = rows.front().dim();
    std::vector<double> e;
    e.reserve(rows.size() * cols);
    for (const auto& r : rows) {
      require(r.dim() == cols, ErrorKind::invalid_input, "row dimension mismatch");
      e.insert(e.end(), r.begin(), r.end());
    }
    return Matrix(rows.size(), cols, std::move(e));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return entries_.empty(); }

  double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
  std::span<const double> entries() const noexcept { return entries_; }

  Vector row(std::size_t i) const {
    return Vector(std::vector<double>(entries_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
                                      entries_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_)));
  }

  Vector column(std::size_t j) const {
    std::vector<double> c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return Vector(std::move(c));
  }

  std::vector<Vector> columns() const {
    std::vector<Vector> out;
    out.reserve(cols_);
    for (std::size_t j = 0; j < cols_; ++j) out.push_back(column(j));
    return out;
  }

  Matrix transpose() const {
    std::vector<double> t(entries_.size());
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t[j * rows_ + i] = (*this)(i, j);
    return Matrix(cols_, rows_, std::move(t));
  }

  Matrix scaled(double c) const {
    std::vector<double> e(entries_);
    for (double& x : e) x *= c;
    return Matrix(rows_, cols_, std::move(e));
  }

  Vector apply(std::span<const double> x) const {
    require(x.size() == cols_, ErrorKind::invalid_input, "matrix-vector dimension mismatch");
    std::vector<double> y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) y[i] += (*this)(i, j) * x[j];
    return Vector(std::move(y));
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

// ---------------------------------------------------------------------------
// Vector arithmetic on raw spans. Used internally by every module.

inline double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::invalid_input, "dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) {
  // Scaled to avoid overflow on large entries.
  double scale = 0.0;
  for (double x : a) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (double x : a) s += (x / scale) * (x / scale);
  return scale * std::sqrt(s);
}

inline double dot(const Vector& a, const Vector& b) { return dot(a.entries(), b.entries()); }
inline double norm(const Vector& a) { return norm(a.entries()); }

inline Vector operator+(const Vector& a, const Vector& b) {
  require(a.dim() == b.dim(), ErrorKind::invalid_input, "vector sum: dimension mismatch");
  std::vector<double> r(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) r[i] = a[i] + b[i];
  return Vector(std::move(r));
}

inline Vector operator-(const Vector& a, const Vector& b) {
  require(a.dim() == b.dim(), ErrorKind::invalid_input, "vector difference: dimension mismatch");
  std::vector<double> r(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) r[i] = a[i] - b[i];
  return Vector(std::move(r));
}

inline Vector operator*(double c, const Vector& a) {
  std::vector<double> r(a.begin(), a.end());
  for (double& x : r) x *= c;
  return Vector(std::move(r));
}

inline Vector normalized(const Vector& a) {
  const double n = norm(a);
  require(n > 0.0, ErrorKind::invalid_input, "cannot normalize the zero vector");
  return (1.0 / n) * a;
}

// ---------------------------------------------------------------------------
// Singular values

/// Nonincreasing nonnegative singular values, min(rows, cols) of them.
struct SingularSpectrum {
  std::vector<double> values;

  double largest() const { return values.empty() ? 0.0 : values.front(); }
  double smallest() const { return values.empty() ? 0.0 : values.back(); }
};

/// Singular values plus the right singular vectors (columns of V, one per
/// input column, ordered to match `all_values`).
struct JacobiSvd {
  std::size_t cols = 0;
  std::vector<double> all_values;      // one per column, nonincreasing
  std::vector<double> right_vectors;   // cols x cols, column k pairs with all_values[k]
  int sweeps = 0;

  Vector right_vector(std::size_t k) const {
    std::vector<double> v(cols);
    for (std::size_t i = 0; i < cols; ++i) v[i] = right_vectors[i * cols + k];
    return Vector(std::move(v));
  }
};

/// One-sided (Hestenes) Jacobi SVD: orthogonalizes the columns of M by plane
/// rotations accumulated into V, so that M V = U diag(s).
inline JacobiSvd jacobi_svd(const Matrix& m) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  require(rows > 0 && cols > 0, ErrorKind::invalid_input, "svd of an empty matrix");

  // Column-major working copy so each column is contiguous.
  std::vector<double> w(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) w[j * rows + i] = m(i, j);
  std::vector<double> v(cols * cols, 0.0);  // column-major as well
  for (std::size_t j = 0; j < cols; ++j) v[j * cols + j] = 1.0;

  constexpr double tol = 1e-15;
  constexpr int max_sweeps = 80;
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        double* wp = &w[p * rows];
        double* wq = &w[q * rows];
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
          alpha += wp[i] * wp[i];
          beta += wq[i] * wq[i];
          gamma += wp[i] * wq[i];
        }
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double a = wp[i];
          const double b = wq[i];
          wp[i] = c * a - s * b;
          wq[i] = s * a + c * b;
        }
        double* vp = &v[p * cols];
        double* vq = &v[q * cols];
        for (std::size_t i = 0; i < cols; ++i) {
          const double a = vp[i];
          const double b = vq[i];
          vp[i] = c * a - s * b;
          vq[i] = s * a + c * b;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sv(cols);
  for (std::size_t j = 0; j < cols; ++j) sv[j] = norm(std::span<const double>(&w[j * rows], rows));

  std::vector<std::size_t> order(cols);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sv[a] > sv[b]; });

  JacobiSvd out;
  out.cols = cols;
  out.sweeps = sweep;
  out.all_values.resize(cols);
  out.right_vectors.resize(cols * cols);
  for (std::size_t k = 0; k < cols; ++k) {
    out.all_values[k] = sv[order[k]];
    for (std::size_t i = 0; i < cols; ++i) out.right_vectors[i * cols + k] = v[order[k] * cols + i];
  }
  return out;
}

inline SingularSpectrum singular_values(const Matrix& m) {
  require(!m.empty(), ErrorKind::invalid_input, "singular values of an empty matrix");
  // Jacobi on the wider side's columns; singular values are shared with the transpose.
  const JacobiSvd svd = m.rows() >= m.cols() ? jacobi_svd(m) : jacobi_svd(m.transpose());
  SingularSpectrum s;
  s.values.assign(svd.all_values.begin(),
                  svd.all_values.begin() + static_cast<std::ptrdiff_t>(std::min(m.rows(), m.cols())));
  return s;
}

/// Exact singularity test for matrices whose entries are small integers
/// (e.g. sign matrices), via fraction-free Bareiss elimination. Returns
/// nullopt when the matrix is not integer valued or the exact computation
/// could overflow 64-bit arithmetic.
inline std::optional<bool> exactly_singular_integer(const Matrix& m) {
  if (!m.square()) return std::nullopt;
  const std::size_t d = m.rows();
  double max_abs = 0.0;
  for (double x : m.entries()) {
    if (x != std::trunc(x)) return std::nullopt;
    max_abs = std::max(max_abs, std::abs(x));
  }
  if (max_abs == 0.0) return true;
  // Every intermediate is a minor, bounded by Hadamard: (max_abs sqrt(k))^k.
  // Products of two such values must stay below 2^62.
  const double log2_bound = static_cast<double>(d) * std::log2(max_abs * std::sqrt(static_cast<double>(d)));
  if (2.0 * log2_bound > 62.0) return std::nullopt;

  std::vector<std::int64_t> a(d * d);
  for (std::size_t i = 0; i < d * d; ++i) a[i] = static_cast<std::int64_t>(m.entries()[i]);
  std::int64_t prev = 1;
  for (std::size_t k = 0; k < d; ++k) {
    std::size_t pivot = k;
    while (pivot < d && a[pivot * d + k] == 0) ++pivot;
    if (pivot == d) return true;
    if (pivot != k)
      for (std::size_t j = 0; j < d; ++j) std::swap(a[k * d + j], a[pivot * d + j]);
    for (std::size_t i = k + 1; i < d; ++i) {
      for (std::size_t j = k + 1; j < d; ++j)
        a[i * d + j] = (a[i * d + j] * a[k * d + k] - a[i * d + k] * a[k * d + j]) / prev;
      a[i * d + k] = 0;
    }
    prev = a[k * d + k];
  }
  return a[(d - 1) * d + (d - 1)] == 0;
}

/// Largest singular value, max ||Mx|| / ||x||.
inline double operator_norm(const Matrix& m) {
  require(!m.empty(), ErrorKind::invalid_input, "operator_norm of an empty matrix");
  return singular_values(m).largest();
}

/// ||M^{-1}|| = 1 / sigma_min(M); +infinity for singular M.
inline double inverse_norm(const Matrix& m) {
  require(m.square() && !m.empty(), ErrorKind::invalid_input, "inverse_norm needs a square matrix");
  if (const auto singular = exactly_singular_integer(m); singular && *singular) return kInfinity;
  const double smin = singular_values(m).smallest();
  if (smin < kSingularThreshold) return kInfinity;
  return 1.0 / smin;
}

/// kappa(M) = ||M|| ||M^{-1}||, at least 1; +infinity for singular M.
inline double condition_number(const Matrix& m) {
  require(m.square() && !m.empty(), ErrorKind::invalid_input, "condition_number needs a square matrix");
  if (const auto singular = exactly_singular_integer(m); singular && *singular) return kInfinity;
  const SingularSpectrum s = singular_values(m);
  if (s.smallest() < kSingularThreshold) return kInfinity;
  return std::max(1.0, s.largest() / s.smallest());
}

// ---------------------------------------------------------------------------
// Linear solves

/// Solves A x = b for square A by LU with partial pivoting. Returns nullopt
/// when a pivot falls below `rel_pivot_tol` times the largest row norm.
inline std::optional<std::vector<double>> solve_square(std::size_t d, std::vector<double> a,
                                                       std::vector<double> b, double rel_pivot_tol = 1e-11) {
  double scale = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    scale = std::max(scale, norm(std::span<const double>(&a[i * d], d)));
  if (scale == 0.0) return std::nullopt;
  for (std::size_t k = 0; k < d; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < d; ++i)
      if (std::abs(a[i * d + k]) > std::abs(a[p * d + k])) p = i;
    if (std::abs(a[p * d + k]) <= rel_pivot_tol * scale) return std::nullopt;
    if (p != k) {
      for (std::size_t j = 0; j < d; ++j) std::swap(a[k * d + j], a[p * d + j]);
      std::swap(b[k], b[p]);
    }
    for (std::size_t i = k + 1; i < d; ++i) {
      const double f = a[i * d + k] / a[k * d + k];
      if (f == 0.0) continue;
      for (std::size_t j = k; j < d; ++j) a[i * d + j] -= f * a[k * d + j];
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(d);
  for (std::size_t k = d; k-- > 0;) {
    double s = b[k];
    for (std::size_t j = k + 1; j < d; ++j) s -= a[k * d + j] * x[j];
    x[k] = s / a[k * d + k];
  }
  return x;
}

// ---------------------------------------------------------------------------
// Distances and height

/// Euclidean distance from v to span(basis). An empty basis gives ||v||.
inline double distance_to_span(const Vector& v, std::span<const Vector> basis) {
  for (const auto& b : basis)
    require(b.dim() == v.dim(), ErrorKind::invalid_input, "distance_to_span: dimension mismatch");

  // Modified Gram-Schmidt with one reorthogonalization pass; directions whose
  // residual is negligible relative to their own norm are dependent and skipped.
  std::vector<std::vector<double>> q;
  for (const auto& b : basis) {
    std::vector<double> u(b.begin(), b.end());
    const double original = norm(u);
    if (original == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& e : q) {
        const double c = dot(u, e);
        for (std::size_t i = 0; i < u.size(); ++i) u[i] -= c * e[i];
      }
    const double n = norm(u);
    if (n <= 1e-13 * original) continue;
    for (double& x : u) x /= n;
    q.push_back(std::move(u));
  }

  std::vector<double> r(v.begin(), v.end());
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& e : q) {
      const double c = dot(r, e);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] -= c * e[i];
    }
  return norm(r);
}

/// min_i dist(a_i, span of the other columns) for d vectors in R^d.
inline double height(std::span<const Vector> columns) {
  const std::size_t d = columns.size();
  require(d > 0, ErrorKind::invalid_input, "height of an empty column set");
  for (const auto& c : columns)
    require(c.dim() == d, ErrorKind::invalid_input, "height needs exactly d vectors of dimension d");

  double h = kInfinity;
  std::vector<Vector> others;
  others.reserve(d - 1);
  for (std::size_t i = 0; i < d; ++i) {
    others.clear();
    for (std::size_t j = 0; j < d; ++j)
      if (j != i) others.push_back(columns[j]);
    h = std::min(h, distance_to_span(columns[i], others));
  }
  return h;
}

inline double height(const Matrix& m) {
  require(m.square(), ErrorKind::invalid_input, "height needs a square matrix");
  const auto cols = m.columns();
  return height(std::span<const Vector>(cols));
}

}  // namespace smoothlab
