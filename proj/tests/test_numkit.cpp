#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "smoothlab/numkit.hpp"
#include "smoothlab/perturb.hpp"

namespace smoothlab {
namespace {

// Oracle: power iteration on M^T M.
double power_iteration_norm(const Matrix& m) {
  std::vector<double> v(m.cols(), 1.0);
  double lambda = 0.0;
  for (int it = 0; it < 5000; ++it) {
    const Vector mv = m.apply(v);
    const Vector mtmv = m.transpose().apply(mv.entries());
    const double n = norm(mtmv);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = mtmv[i] / n;
    lambda = n;
  }
  return std::sqrt(lambda);
}

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  return e;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t stream) {
  return gaussian_matrix(Matrix::zeros(rows, cols), 1.0, SeedSpec{99, stream});
}

TEST(OperatorNorm, IdentityAndDiagonal) {
  EXPECT_DOUBLE_EQ(operator_norm(Matrix::identity(3)), 1.0);
  EXPECT_DOUBLE_EQ(operator_norm(Matrix{{3, 0}, {0, 1}}), 3.0);
  EXPECT_EQ(operator_norm(Matrix::zeros(2, 3)), 0.0);
}

TEST(OperatorNorm, MatchesPowerIteration) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix m = random_matrix(4, 4, s);
    const double oracle = power_iteration_norm(m);
    EXPECT_NEAR(operator_norm(m), oracle, 1e-10 * oracle) << "stream " << s;
  }
}

TEST(OperatorNorm, RectangularMatchesEigen) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Matrix wide = random_matrix(3, 6, s);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(wide));
    EXPECT_NEAR(operator_norm(wide), svd.singularValues()(0), 1e-12 * svd.singularValues()(0));
    const SingularSpectrum spec = singular_values(wide);
    ASSERT_EQ(spec.values.size(), 3u);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(spec.values[static_cast<std::size_t>(k)], svd.singularValues()(k), 1e-12 * svd.singularValues()(0));
  }
}

TEST(OperatorNorm, RejectsNonFinite) {
  EXPECT_THROW(Matrix(1, 1, {std::nan("")}), Error);
  EXPECT_THROW(Matrix(1, 2, {1.0, kInfinity}), Error);
}

TEST(InverseNorm, KnownCases) {
  EXPECT_DOUBLE_EQ(inverse_norm(Matrix::identity(4)), 1.0);
  EXPECT_DOUBLE_EQ(inverse_norm(Matrix{{2, 0}, {0, 0.5}}), 2.0);
  EXPECT_EQ(inverse_norm(Matrix{{1, 1}, {1, 1}}), kInfinity);
  EXPECT_EQ(inverse_norm(Matrix::zeros(3, 3)), kInfinity);
}

TEST(InverseNorm, NonSquareIsInvalid) {
  try {
    inverse_norm(Matrix::zeros(2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
  }
  EXPECT_THROW(condition_number(Matrix::zeros(3, 2)), Error);
}

TEST(ConditionNumber, KnownCases) {
  EXPECT_DOUBLE_EQ(condition_number(Matrix::identity(5)), 1.0);
  EXPECT_DOUBLE_EQ(condition_number(Matrix{{4, 0}, {0, 1}}), 4.0);
  EXPECT_EQ(condition_number(Matrix{{1, 2}, {2, 4}}), kInfinity);
}

TEST(ConditionNumber, MatchesFullSvdOracle) {
  for (std::uint64_t s = 0; s < 25; ++s) {
    const Matrix m = random_matrix(5, 5, 100 + s);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(m));
    const auto& sv = svd.singularValues();
    const double oracle = sv(0) / sv(4);
    EXPECT_NEAR(condition_number(m), oracle, 1e-9 * oracle);
    EXPECT_NEAR(inverse_norm(m), 1.0 / sv(4), 1e-9 / sv(4));
  }
}

TEST(ConditionNumber, AtLeastOneAndOneForScaledOrthogonal) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Matrix m = random_matrix(1 + s % 6, 1 + s % 6, 200 + s);
    EXPECT_GE(condition_number(m), 1.0);
  }
  const double c = std::cos(0.3), s = std::sin(0.3);
  EXPECT_NEAR(condition_number(Matrix{{2.5 * c, -2.5 * s}, {2.5 * s, 2.5 * c}}), 1.0, 1e-14);
}

TEST(ExactSingularity, IntegerMatrices) {
  EXPECT_EQ(exactly_singular_integer(Matrix{{1, 1}, {1, 1}}), std::optional<bool>(true));
  EXPECT_EQ(exactly_singular_integer(Matrix{{1, -1}, {1, 1}}), std::optional<bool>(false));
  EXPECT_EQ(exactly_singular_integer(Matrix{{0, 1}, {1, 0}}), std::optional<bool>(false));
  EXPECT_EQ(exactly_singular_integer(Matrix{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}}), std::optional<bool>(true));
  EXPECT_EQ(exactly_singular_integer(Matrix{{0.5, 0}, {0, 1}}), std::nullopt);
}

TEST(ScaleCovariance, NormsScaleWithC) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix m = random_matrix(4, 4, 300 + s);
    for (double c : {-3.0, 0.25, 7.0}) {
      EXPECT_NEAR(operator_norm(m.scaled(c)), std::abs(c) * operator_norm(m), 1e-12 * std::abs(c) * operator_norm(m));
      EXPECT_NEAR(inverse_norm(m.scaled(c)), inverse_norm(m) / std::abs(c), 1e-9 * inverse_norm(m) / std::abs(c));
    }
  }
}

TEST(DistanceToSpan, HandCases) {
  const Vector e1{1, 0};
  const Vector e2{0, 1};
  EXPECT_DOUBLE_EQ(distance_to_span(e2, std::vector<Vector>{e1}), 1.0);
  EXPECT_DOUBLE_EQ(distance_to_span(e1, std::vector<Vector>{e1}), 0.0);
  EXPECT_NEAR(distance_to_span(e1, std::vector<Vector>{Vector{1, 1}}), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(distance_to_span(Vector{3, 4}, std::vector<Vector>{}), 5.0);
  EXPECT_THROW(distance_to_span(e1, std::vector<Vector>{Vector{1, 0, 0}}), Error);
}

TEST(DistanceToSpan, ZeroExactlyForMembers) {
  RandomStream rng(SeedSpec{5, 0});
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vector> basis;
    for (int k = 0; k < 3; ++k) basis.emplace_back(rng.gaussian_vector(5));
    const double a = rng.gaussian(), b = rng.gaussian();
    const Vector member = a * basis[0] + b * basis[2];
    EXPECT_LT(distance_to_span(member, basis), 1e-13 * (1.0 + norm(member)));
    const Vector outside(rng.gaussian_vector(5));
    EXPECT_GT(distance_to_span(outside, basis), 1e-6);
  }
}

TEST(Height, HandCases) {
  EXPECT_DOUBLE_EQ(height(Matrix::identity(3)), 1.0);
  EXPECT_NEAR(height(std::vector<Vector>{Vector{1, 0}, Vector{1, 1}}), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_EQ(height(std::vector<Vector>{Vector{1, 0}, Vector{2, 0}}), 0.0);
  EXPECT_THROW(height(std::vector<Vector>{Vector{1, 0}}), Error);
}

TEST(Height, LemmaInverseNormBound) {
  RandomStream rng(SeedSpec{11, 0});
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(trial % 7);
    const Matrix m = gaussian_matrix(Matrix::zeros(d, d), 0.5 + rng.uniform(), rng);
    const double bound = std::sqrt(static_cast<double>(d)) / height(m);
    EXPECT_LE(inverse_norm(m), bound * (1.0 + 1e-8));
  }
}

TEST(Height, PermutationInvariant) {
  const Matrix m = random_matrix(4, 4, 777);
  auto cols = m.columns();
  std::vector<Vector> permuted{cols[2], cols[0], cols[3], cols[1]};
  const Matrix pm = Matrix::from_columns(permuted);
  EXPECT_NEAR(height(pm), height(m), 1e-14);
  EXPECT_NEAR(operator_norm(pm), operator_norm(m), 1e-13 * operator_norm(m));
  EXPECT_NEAR(inverse_norm(pm), inverse_norm(m), 1e-11 * inverse_norm(m));
}

TEST(SolveSquare, SolvesAndDetectsSingular) {
  const auto x = solve_square(2, {2, 1, 1, 3}, {3, 5});
  ASSERT_TRUE(x);
  EXPECT_NEAR((*x)[0], 0.8, 1e-15);
  EXPECT_NEAR((*x)[1], 1.4, 1e-15);
  EXPECT_FALSE(solve_square(2, {1, 2, 2, 4}, {1, 1}));
}

}  // namespace
}  // namespace smoothlab
