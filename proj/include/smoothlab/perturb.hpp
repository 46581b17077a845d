#pragma once

// Reproducible random models: Gaussian perturbations of center data and
// Rademacher (+-1) matrices.
//
// Stream construction: the 64-bit engine state seed is
//   splitmix64(splitmix64(master_seed) + stream_index * 0x9E3779B97F4A7C15)
// and the engine is std::mt19937_64, whose output sequence is fixed by the
// C++ standard. Uniforms take the top 53 bits of one engine word. Normals
// come from the Marsaglia polar transform: draw u, v uniform on (-1, 1) until
// 0 < s = u^2 + v^2 < 1, then emit u f and v f with f = sqrt(-2 ln(s) / s),
// in that order.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "smoothlab/error.hpp"
#include "smoothlab/numkit.hpp"

namespace smoothlab {

/// (master_seed, stream_index) determines every value drawn from the stream.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;

  SeedSpec with_stream(std::uint64_t index) const { return {master_seed, index}; }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Value-typed random stream. Each trial owns its own.
class RandomStream {
 public:
  explicit RandomStream(SeedSpec seed)
      : engine_(splitmix64(splitmix64(seed.master_seed) + seed.stream_index * 0x9E3779B97F4A7C15ULL)) {}

  std::uint64_t next_word() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double gaussian() {
    if (spare_) {
      const double g = *spare_;
      spare_.reset();
      return g;
    }
    double u = 0.0, v = 0.0, s = 0.0;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    return u * f;
  }

  /// +1 or -1 with probability 1/2 each (top bit of one engine word).
  double sign() { return (engine_() >> 63) ? 1.0 : -1.0; }

  std::vector<double> gaussian_vector(std::size_t dim) {
    std::vector<double> g(dim);
    for (double& x : g) x = gaussian();
    return g;
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Warnings raised when sampled data leaves the hypothesis regime of the
/// shadow-size / simplex bounds; they never stop sampling.
struct SampleWarnings {
  std::vector<std::string> messages;
  bool empty() const { return messages.empty(); }
};

/// 1 / (9 d ln n): the largest variance the shadow-size bound admits.
inline double shadow_regime_variance(std::size_t n, std::size_t d) {
  const double logn = std::log(static_cast<double>(n));
  if (logn <= 0.0) return kInfinity;
  return 1.0 / (9.0 * static_cast<double>(d) * logn);
}

/// sigma^2 <= 1 / (9 d ln n), with a few ulps of slack so that a sigma
/// computed as sqrt(bound) counts as inside.
inline bool in_shadow_regime(double sigma, std::size_t n, std::size_t d) {
  return sigma * sigma <= shadow_regime_variance(n, d) * (1.0 + 1e-12);
}

namespace detail {

inline void check_sigma(double sigma) {
  require(std::isfinite(sigma) && sigma >= 0.0, ErrorKind::invalid_input,
          "sigma must be finite and nonnegative");
}

}  // namespace detail

/// Entrywise center + sigma * N(0, 1), drawn row-major from `stream`.
inline Matrix gaussian_matrix(const Matrix& center, double sigma, RandomStream& stream) {
  detail::check_sigma(sigma);
  if (sigma == 0.0) return center;
  std::vector<double> e(center.entries().begin(), center.entries().end());
  for (double& x : e) x += sigma * stream.gaussian();
  return Matrix(center.rows(), center.cols(), std::move(e));
}

inline Matrix gaussian_matrix(const Matrix& center, double sigma, SeedSpec seed) {
  RandomStream stream(seed);
  return gaussian_matrix(center, sigma, stream);
}

struct PerturbedPoints {
  std::vector<Vector> points;
  SampleWarnings warnings;
};

/// a_i = center_i + sigma g_i. Warns when a center has norm above 1 or when
/// sigma^2 exceeds 1 / (9 d ln n).
inline PerturbedPoints gaussian_points(std::span<const Vector> centers, double sigma, RandomStream& stream) {
  detail::check_sigma(sigma);
  require(!centers.empty(), ErrorKind::invalid_input, "no centers given");
  const std::size_t d = centers.front().dim();
  require(d > 0, ErrorKind::invalid_input, "centers must have positive dimension");

  PerturbedPoints out;
  out.points.reserve(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const Vector& c = centers[i];
    require(c.dim() == d, ErrorKind::invalid_input, "center dimension mismatch");
    if (norm(c) > 1.0 + 1e-12)
      out.warnings.messages.push_back("center " + std::to_string(i) + " has norm above 1");
    if (sigma == 0.0) {
      out.points.push_back(c);
      continue;
    }
    std::vector<double> p(c.begin(), c.end());
    for (double& x : p) x += sigma * stream.gaussian();
    out.points.emplace_back(std::move(p));
  }
  if (!in_shadow_regime(sigma, centers.size(), d))
    out.warnings.messages.push_back("sigma^2 exceeds 1/(9 d log n)");
  return out;
}

inline PerturbedPoints gaussian_points(std::span<const Vector> centers, double sigma, SeedSpec seed) {
  RandomStream stream(seed);
  return gaussian_points(centers, sigma, stream);
}

/// d x d matrix of independent uniform +-1 entries.
inline Matrix rademacher_matrix(std::size_t d, RandomStream& stream) {
  require(d >= 1, ErrorKind::invalid_input, "rademacher_matrix needs d >= 1");
  std::vector<double> e(d * d);
  for (double& x : e) x = stream.sign();
  return Matrix(d, d, std::move(e));
}

inline Matrix rademacher_matrix(std::size_t d, SeedSpec seed) {
  RandomStream stream(seed);
  return rademacher_matrix(d, stream);
}

/// Relative-magnitude perturbation x + sigma ||x|| g.
inline Vector smoothed_input(const Vector& center, double sigma, RandomStream& stream) {
  detail::check_sigma(sigma);
  const double scale = sigma * norm(center);
  if (scale == 0.0) return center;
  std::vector<double> p(center.begin(), center.end());
  for (double& x : p) x += scale * stream.gaussian();
  return Vector(std::move(p));
}

inline Vector smoothed_input(const Vector& center, double sigma, SeedSpec seed) {
  RandomStream stream(seed);
  return smoothed_input(center, sigma, stream);
}

}  // namespace smoothlab
