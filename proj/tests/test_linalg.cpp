#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "newton_universal/linalg.hpp"
#include "newton_universal/sampling.hpp"

namespace nu {
namespace {

Mat random_matrix(std::size_t n, Rng& rng, double diag_boost) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Mat a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = unif(rng);
  for (std::size_t i = 0; i < n; ++i) a(i, i) += diag_boost;
  return a;
}

// Householder reflector I - 2 w w^T / (w^T w): orthogonal and symmetric.
Mat householder(const Vec& w) {
  const double ww = dot(w, w);
  return Mat::identity(w.size()) - (2.0 / ww) * Mat::outer(w, w);
}

Mat explicit_inverse(const Mat& a) {
  const LuFactors f = lu_factor(a);
  Mat inv(a.dim());
  for (std::size_t j = 0; j < a.dim(); ++j) {
    const Vec col = f.solve(Vec::unit(a.dim(), j));
    for (std::size_t i = 0; i < a.dim(); ++i) inv(i, j) = col[i];
  }
  return inv;
}

TEST(LuFactor, IdentityHasUnitPivots) {
  const LuFactors f = lu_factor(Mat::identity(3), 1e-12);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(f.pivot(k), 1.0);
  EXPECT_DOUBLE_EQ(f.min_abs_pivot(), 1.0);
}

TEST(LuFactor, DiagonalPivotsUpToPermutation) {
  const LuFactors f = lu_factor(Mat{{2.0, 0.0}, {0.0, 0.5}}, 1e-12);
  std::vector<double> piv{std::abs(f.pivot(0)), std::abs(f.pivot(1))};
  std::sort(piv.begin(), piv.end());
  EXPECT_DOUBLE_EQ(piv[0], 0.5);
  EXPECT_DOUBLE_EQ(piv[1], 2.0);
}

TEST(LuFactor, ZeroRowIsSingular) {
  const Mat a{{1.0, 2.0, 3.0}, {0.0, 0.0, 0.0}, {4.0, 5.0, 6.0}};
  EXPECT_THROW(lu_factor(a, 1e-12), SingularError);
}

TEST(LuFactor, ZeroMatrixIsSingular) { EXPECT_THROW(lu_factor(Mat(2), 1e-12), SingularError); }

TEST(LuFactor, ThresholdScalesWithLargestEntry) {
  // Pivot 1e-6 passes a 1e-12 relative tolerance, fails 1e-3.
  const Mat a{{1.0, 0.0}, {0.0, 1e-6}};
  EXPECT_NO_THROW(lu_factor(a, 1e-12));
  EXPECT_THROW(lu_factor(a, 1e-3), SingularError);
  // Same matrix scaled by 1e8 keeps the same verdict.
  EXPECT_NO_THROW(lu_factor(1e8 * a, 1e-12));
  EXPECT_THROW(lu_factor(1e8 * a, 1e-3), SingularError);
}

TEST(LuSolve, Identity) {
  const Vec x = lu_solve(lu_factor(Mat::identity(3)), Vec{1.0, 2.0, 3.0});
  EXPECT_EQ(x, (Vec{1.0, 2.0, 3.0}));
}

TEST(LuSolve, Diagonal) {
  const Vec x = lu_solve(lu_factor(Mat{{2.0, 0.0}, {0.0, 4.0}}), Vec{2.0, 4.0});
  EXPECT_DOUBLE_EQ(x[0], 1.0);
  EXPECT_DOUBLE_EQ(x[1], 1.0);
}

TEST(LuSolve, DimensionMismatchThrows) {
  EXPECT_THROW(lu_solve(lu_factor(Mat::identity(3)), Vec{1.0, 2.0}), DimensionError);
}

TEST(LuSolve, RandomWellConditionedResidual) {
  Rng rng = make_rng(11);
  const Mat a = random_matrix(10, rng, 10.0);
  const Vec b = random_in_ball(Vec(10), 3.0, rng);
  const Vec x = lu_solve(lu_factor(a), b);
  EXPECT_LE(norm(a * x - b), 1e-10);
}

TEST(LuSolve, ReproducesRightHandSideOnRandomInstances) {
  Rng rng = make_rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 20);
    const Mat a = random_matrix(n, rng, static_cast<double>(n));
    const Vec b = random_in_ball(Vec(n), 1.0, rng);
    const LuFactors f = lu_factor(a);
    EXPECT_LE(norm(a * f.solve(b) - b), 1e-10 * (1.0 + norm(b))) << "trial " << trial;
    EXPECT_LE(norm(a.transposed() * f.solve_transposed(b) - b), 1e-10 * (1.0 + norm(b))) << "trial " << trial;
  }
}

TEST(OperatorNorm, ZeroMatrix) { EXPECT_EQ(operator_norm(Mat(4)), 0.0); }

TEST(OperatorNorm, Diagonal) { EXPECT_NEAR(operator_norm(Mat{{3.0, 0.0}, {0.0, -7.0}}), 7.0, 7e-8); }

TEST(OperatorNorm, RankOneOuterProduct) {
  const Vec x{1.0, -2.0, 0.5, 3.0};
  const Vec y{0.25, 4.0, -1.0, 2.0};
  const double expected = norm(x) * norm(y);
  EXPECT_NEAR(operator_norm(Mat::outer(x, y)), expected, 1e-8 * expected);
}

TEST(InverseOperatorNorm, Identity) { EXPECT_NEAR(inverse_operator_norm(Mat::identity(3)), 1.0, 1e-8); }

TEST(InverseOperatorNorm, Diagonal) { EXPECT_NEAR(inverse_operator_norm(Mat{{2.0, 0.0}, {0.0, 0.5}}), 2.0, 2e-8); }

TEST(InverseOperatorNorm, SingularThrows) {
  EXPECT_THROW(inverse_operator_norm(Mat{{1.0, 1.0}, {1.0, 1.0}}), SingularError);
}

TEST(InverseOperatorNorm, KnownSpectrumBySimilarity) {
  // A = H diag(1..5) H with H an orthogonal reflector: eigenvalues 1..5.
  const Mat h = householder(Vec{1.0, -0.3, 2.0, 0.7, -1.1});
  const Mat a = h * Mat::diagonal(Vec{1.0, 2.0, 3.0, 4.0, 5.0}) * h;
  EXPECT_NEAR(inverse_operator_norm(a), 1.0, 1e-8);
  EXPECT_NEAR(operator_norm(a), 5.0, 5e-8);
}

TEST(InverseOperatorNorm, MatchesNormOfExplicitInverse) {
  Rng rng = make_rng(13);
  for (std::size_t n = 1; n <= 20; ++n) {
    const Mat a = random_matrix(n, rng, 0.5 * static_cast<double>(n));
    const double direct = inverse_operator_norm(a);
    const double via_inverse = operator_norm(explicit_inverse(a));
    EXPECT_NEAR(direct, via_inverse, 1e-8 * via_inverse) << "n = " << n;
  }
}

TEST(OperatorNorm, ConditionNumberAtLeastOne) {
  Rng rng = make_rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 12);
    const Mat a = random_matrix(n, rng, 1.0);
    double inv = 0.0;
    try {
      inv = inverse_operator_norm(a);
    } catch (const SingularError&) {
      continue;
    }
    EXPECT_GE(operator_norm(a) * inv, 1.0 - 1e-12) << "trial " << trial;
  }
}

TEST(OperatorNorm, MatchesJacobiEigenvaluesOfGram) {
  // Independent route: cyclic Jacobi on A^T A gives all eigenvalues.
  Rng rng = make_rng(15);
  const std::size_t n = 6;
  const Mat a = random_matrix(n, rng, 0.0);
  Mat g = a.transposed() * a;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += g(p, q) * g(p, q);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (g(p, q) == 0.0) continue;
        const double theta = 0.5 * std::atan2(2.0 * g(p, q), g(q, q) - g(p, p));
        const double c = std::cos(theta), s = std::sin(theta);
        Mat r = Mat::identity(n);
        r(p, p) = c;
        r(q, q) = c;
        r(p, q) = s;
        r(q, p) = -s;
        g = r.transposed() * g * r;
      }
  }
  double top = 0.0;
  for (std::size_t i = 0; i < n; ++i) top = std::max(top, g(i, i));
  EXPECT_NEAR(operator_norm(a), std::sqrt(top), 1e-8 * std::sqrt(top));
}

}  // namespace
}  // namespace nu
