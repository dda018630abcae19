#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mlml/metrics.hpp"
#include "mlml/projectile.hpp"
#include "mlml/random.hpp"
#include "oracles.hpp"

using namespace mlml;

TEST(PredictionError, Examples) {
  const std::vector<double> t{3, 4};
  EXPECT_EQ(prediction_error(t, t, 2), 0.0);
  EXPECT_EQ(prediction_error(std::vector<double>{0, 0}, t, 2), 1.0);
  EXPECT_EQ(prediction_error(std::vector<double>{0, 0}, t, 1), 1.0);
  EXPECT_NEAR(prediction_error(std::vector<double>{3, 0}, t, 2), 0.8, 1e-15);
}

TEST(PredictionError, EuclideanRatio) {
  Rng rng(1);
  std::vector<double> a(100), b(100);
  for (std::size_t i = 0; i < 100; ++i) {
    a[i] = rng.normal();
    b[i] = a[i] + 0.1 * rng.normal();
  }
  double num = 0, den = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    num += (b[i] - a[i]) * (b[i] - a[i]);
    den += a[i] * a[i];
  }
  EXPECT_NEAR(prediction_error(b, a, 2), std::sqrt(num) / std::sqrt(den), 1e-14);
}

TEST(PredictionError, Guards) {
  const std::vector<double> z{0, 0};
  EXPECT_THROW(prediction_error(z, z, 2), std::domain_error);
  EXPECT_THROW(prediction_error(z, std::vector<double>{1, 2}, 3), std::invalid_argument);
  EXPECT_THROW(prediction_error(std::vector<double>{1}, std::vector<double>{1, 2}, 2), std::invalid_argument);
  EXPECT_THROW(prediction_error(std::vector<double>{}, std::vector<double>{}, 2), std::invalid_argument);
}

TEST(Gain, Examples) {
  EXPECT_EQ(gain(0.02, 0.02), 1.0);
  EXPECT_NEAR(gain(0.04, 0.01), 4.0, 1e-15);
  for (double c : {1e-3, 0.5, 7.0, 1e6}) EXPECT_NEAR(gain(0.04 * c, 0.01 * c), 4.0, 1e-12);
  EXPECT_THROW(gain(1.0, 0.0), std::domain_error);
}

TEST(Wasserstein, Examples) {
  const std::vector<double> a{0.3, -1.0, 2.0};
  EXPECT_EQ(wasserstein1(a, a), 0.0);
  EXPECT_EQ(wasserstein1(std::vector<double>{0.0}, std::vector<double>{1.0}), 1.0);
  EXPECT_NEAR(wasserstein1(std::vector<double>{0.0, 1.0}, std::vector<double>{0.5, 0.5}), 0.5, 1e-15);
  EXPECT_THROW(wasserstein1(std::vector<double>{}, a), std::invalid_argument);
}

TEST(Wasserstein, UnequalSizes) {
  // {0} vs {0, 1}: half the mass moves by 1
  EXPECT_NEAR(wasserstein1(std::vector<double>{0.0}, std::vector<double>{0.0, 1.0}), 0.5, 1e-15);
  EXPECT_NEAR(wasserstein1(std::vector<double>{0.0, 3.0}, std::vector<double>{1.0, 1.0, 1.0}), 1.5, 1e-15);
}

TEST(Wasserstein, MetricAxioms) {
  Rng rng(2);
  auto draw = [&](std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
  };
  for (int t = 0; t < 100; ++t) {
    const auto a = draw(7), b = draw(7), c = draw(7);
    EXPECT_EQ(wasserstein1(a, b), wasserstein1(b, a));
    EXPECT_LE(wasserstein1(a, c), wasserstein1(a, b) + wasserstein1(b, c) + 1e-12);
    EXPECT_GT(wasserstein1(a, b), 0.0);
    auto shuffled = a;
    std::reverse(shuffled.begin(), shuffled.end());
    EXPECT_EQ(wasserstein1(a, shuffled), 0.0);
  }
}

TEST(Wasserstein, TranslationInvariant) {
  // dyadic atoms and shift keep every sum exact
  const std::vector<double> a{0.25, 1.5, -2.0, 3.125}, b{0.5, 0.75, -1.0};
  for (double c : {1.0, -3.5, 128.0}) {
    std::vector<double> as = a, bs = b;
    for (double& x : as) x += c;
    for (double& x : bs) x += c;
    EXPECT_EQ(wasserstein1(as, bs), wasserstein1(a, b));
  }
}

TEST(Wasserstein, MatchesTransportOracle) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(6), m = 1 + rng.below(6);
    std::vector<double> a(n), b(m);
    for (double& x : a) x = rng.normal();
    for (double& x : b) x = 0.5 + 2.0 * rng.uniform();
    EXPECT_NEAR(wasserstein1(a, b), oracle::transport_w1(a, b), 1e-9) << n << "x" << m;
  }
}

TEST(Wasserstein, MeasureOverload) {
  EmpiricalMeasure a, b;
  a.atoms = {0.0};
  b.atoms = {2.0};
  EXPECT_EQ(wasserstein1(a, b), 2.0);
}

TEST(SampleStats, Examples) {
  EXPECT_EQ(sample_variance(std::vector<double>{1, 1, 1}), 0.0);
  EXPECT_EQ(sample_variance(std::vector<double>{0, 2}), 2.0);
  EXPECT_NEAR(sample_std(std::vector<double>{0, 2}), std::sqrt(2.0), 1e-15);
  EXPECT_EQ(sample_mean(std::vector<double>{1, 2, 6}), 3.0);
  EXPECT_THROW(sample_variance(std::vector<double>{1}), TooFewAtomsError);
  EXPECT_THROW(sample_mean(std::vector<double>{}), TooFewAtomsError);
}

TEST(SampleStats, StandardNormal) {
  Rng rng(4);
  std::vector<double> v(100000);
  for (double& x : v) x = rng.normal();
  EXPECT_NEAR(sample_std(v), 1.0, 0.01);
}

TEST(Bound, HandExample) {
  const auto b = generalization_bound(0, 0, 1, 1, 16);
  EXPECT_NEAR(b.bound, std::sqrt(2.0), 1e-15);
  EXPECT_FALSE(b.compression.has_value());
}

TEST(Bound, QuarterSamplesHalveStdTerm) {
  const auto a = generalization_bound(0.1, 0.05, 2.0, 1.5, 64);
  const auto b = generalization_bound(0.1, 0.05, 2.0, 1.5, 256);
  EXPECT_NEAR(b.bound - 0.15, 0.5 * (a.bound - 0.15), 1e-15);
}

TEST(Bound, Compression) {
  const auto b = generalization_bound(0.1, 0.2, 0.0, 0.0, 4, 0.1);
  ASSERT_TRUE(b.compression.has_value());
  EXPECT_NEAR(*b.compression, 3.0, 1e-14);
  EXPECT_THROW(generalization_bound(0, 0, 1, 1, 0), std::invalid_argument);
  EXPECT_THROW(generalization_bound(-1, 0, 1, 1, 4), std::invalid_argument);
}

TEST(LogLogSlope, PowerLaw) {
  std::vector<double> x, y;
  for (double n : {16.0, 32.0, 64.0, 128.0}) {
    x.push_back(n);
    y.push_back(5.0 * std::pow(n, -0.82));
  }
  EXPECT_NEAR(loglog_slope(x, y), -0.82, 1e-12);
  EXPECT_THROW(loglog_slope(std::vector<double>{1.0}, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(ErrorStudy, SingleRunDegenerates) {
  const ProjectileModel model;
  ErrorStudyConfig c;
  c.sizes = {16, 32};
  c.repetitions = 1;
  c.validation_sets = 1;
  c.pool_size = 200;
  c.map_std_samples = 200;
  c.surrogate_std_samples = 100;
  c.hidden_layers = 2;
  c.width = 6;
  c.training.epochs = 200;
  c.level = 3;
  c.seed = 5;
  c.workers = 1;
  const auto rows = cumulative_error_study(model, c);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    // one validation set: the gap is |E_T - E_V| exactly
    EXPECT_DOUBLE_EQ(r.validation_gap, std::abs(r.training_error - r.validation_error));
    EXPECT_GT(r.generalization_error, 0.0);
    const auto b = generalization_bound(r.training_error, r.validation_gap, r.map_std, r.surrogate_std, r.size,
                                        r.generalization_error);
    EXPECT_EQ(r.bound, b.bound);
    EXPECT_EQ(r.compression, *b.compression);
  }
  const auto again = cumulative_error_study(model, c);
  EXPECT_EQ(again[1].generalization_error, rows[1].generalization_error);
  const auto csv = error_study_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "size,E_T,E_V,E_TV,E_G,bound,compression");
}

TEST(ErrorStudy, ConfigGuards) {
  ErrorStudyConfig c;
  c.sizes = {2000};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.sizes = {16};
  c.repetitions = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}
