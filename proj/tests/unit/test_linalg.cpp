#include <gtest/gtest.h>

#include <cmath>

#include "mlml/linalg.hpp"
#include "mlml/random.hpp"

using namespace mlml;

namespace {

DenseMatrix random_spd(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) b(i, j) = rng.normal();
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = i == j ? 1.0 : 0.0;
      for (std::size_t k = 0; k < n; ++k) s += b(k, i) * b(k, j);
      a(i, j) = s;
    }
  return a;
}

}  // namespace

TEST(Cholesky, Identity) {
  const auto l = cholesky(DenseMatrix::identity(4));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(l(i, j), i == j ? 1.0 : 0.0);
}

TEST(Cholesky, HandExample) {
  const auto l = cholesky(DenseMatrix(2, 2, {4, 2, 2, 3}));
  EXPECT_DOUBLE_EQ(l(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(l(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(l(1, 0), 1.0);
  EXPECT_NEAR(l(1, 1), std::sqrt(2.0), 1e-15);
}

TEST(Cholesky, RoundTrip) {
  const auto a = random_spd(20, 1);
  const auto l = cholesky(a);
  double worst = 0.0;
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < 20; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 20; ++k) s += l(i, k) * l(j, k);
      worst = std::max(worst, std::abs(s - a(i, j)));
    }
  EXPECT_LT(worst, 1e-10);
}

TEST(Cholesky, ReportsFailingPivot) {
  try {
    cholesky(DenseMatrix(3, 3, {1, 0, 0, 0, 1, 2, 0, 2, 1}));
    FAIL() << "expected NotPositiveDefiniteError";
  } catch (const NotPositiveDefiniteError& e) {
    EXPECT_EQ(e.pivot(), 2u);
  }
}

TEST(Cholesky, RejectsNonSquare) { EXPECT_THROW(cholesky(DenseMatrix(2, 3)), std::invalid_argument); }

TEST(SolveSpd, IdentityFactor) {
  const std::vector<double> b{1.5, -2.0, 3.0};
  EXPECT_EQ(solve_spd(DenseMatrix::identity(3), b), b);
}

TEST(SolveSpd, ResidualSmall) {
  for (std::size_t n : {5, 50, 500}) {
    const auto a = random_spd(n, n);
    Rng rng(7);
    std::vector<double> b(n);
    for (double& v : b) v = rng.normal();
    const auto x = solve_spd(cholesky(a), b);
    double worst = 0.0, bmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a(i, j) * x[j];
      worst = std::max(worst, std::abs(s - b[i]));
      bmax = std::max(bmax, std::abs(b[i]));
    }
    EXPECT_LT(worst, 1e-9 * bmax) << n;
  }
}

TEST(SolveSpd, LogDet) {
  const auto l = cholesky(DenseMatrix(2, 2, {4, 2, 2, 3}));
  EXPECT_NEAR(log_det_from_factor(l), std::log(8.0), 1e-14);
}

TEST(Lstsq2, OrthogonalRecovery) {
  const std::vector<double> a1{1, 0, 1, 0}, a2{0, 1, 0, 1};
  std::vector<double> z(4);
  for (int i = 0; i < 4; ++i) z[i] = 2 * a1[i] + 5 * a2[i];
  const auto r = lstsq_2(a1, a2, z);
  EXPECT_FALSE(r.singular);
  EXPECT_NEAR(r.alpha1, 2.0, 1e-14);
  EXPECT_NEAR(r.alpha2, 5.0, 1e-14);
}

TEST(Lstsq2, SingularFlag) {
  const std::vector<double> a{1, 2, 3}, z{1, 1, 1};
  EXPECT_TRUE(lstsq_2(a, a, z).singular);
}

TEST(Lstsq2, SolutionIsLocalMinimum) {
  Rng rng(3);
  std::vector<double> a1(30), a2(30), z(30);
  for (std::size_t i = 0; i < 30; ++i) {
    a1[i] = rng.normal();
    a2[i] = rng.normal();
    z[i] = rng.normal();
  }
  const auto r = lstsq_2(a1, a2, z);
  const auto residual = [&](double x, double y) {
    double s = 0.0;
    for (std::size_t i = 0; i < 30; ++i) s += std::pow(z[i] - x * a1[i] - y * a2[i], 2);
    return s;
  };
  const double best = residual(r.alpha1, r.alpha2);
  for (double dx : {-1e-4, 0.0, 1e-4})
    for (double dy : {-1e-4, 0.0, 1e-4}) EXPECT_GE(residual(r.alpha1 + dx, r.alpha2 + dy), best);
}
