#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mlml/csv.hpp"
#include "mlml/neural_net.hpp"
#include "mlml/param_space.hpp"
#include "mlml/random.hpp"
#include "oracles.hpp"

using namespace mlml;

namespace {

Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n * d), y(n);
  for (double& v : x) v = rng.uniform();
  for (double& v : y) v = rng.normal();
  return Dataset(d, std::move(x), std::move(y));
}

NetworkParameters tiny_net(double w, double b, double w2, double b2) {
  NetworkArchitecture arch{{1, 1, 1}};
  NetworkParameters p(arch);
  p.weights(0)[0] = w;
  p.biases(0)[0] = b;
  p.weights(1)[0] = w2;
  p.biases(1)[0] = b2;
  return p;
}

double max_relative_error(std::span<const double> g, std::span<const double> fd) {
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double scale = std::max({std::abs(g[i]), std::abs(fd[i]), 1e-6});
    worst = std::max(worst, std::abs(g[i] - fd[i]) / scale);
  }
  return worst;
}

}  // namespace

TEST(Architecture, ParameterCount) {
  EXPECT_EQ(NetworkArchitecture::fully_connected(7, 6, 10).parameter_count(), 641u);
  EXPECT_EQ((NetworkArchitecture{{7, 10, 1}}).parameter_count(), 91u);
}

TEST(Architecture, RejectsNonScalarOutput) {
  EXPECT_THROW((NetworkArchitecture{{3, 4, 2}}).validate(), std::invalid_argument);
  EXPECT_THROW((NetworkArchitecture{{3}}).validate(), std::invalid_argument);
}

TEST(HeInit, Deterministic) {
  const auto arch = NetworkArchitecture::fully_connected(7, 6, 10);
  const auto a = he_init(arch, 9);
  const auto b = he_init(arch, 9);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  const auto c = he_init(arch, 10);
  EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
}

TEST(HeInit, BiasesZero) {
  const auto p = he_init(NetworkArchitecture::fully_connected(7, 6, 10), 1);
  for (std::size_t k = 0; k < 7; ++k)
    for (double b : p.biases(k)) EXPECT_EQ(b, 0.0);
}

TEST(HeInit, WeightVariance) {
  const NetworkArchitecture arch{{8, 1000, 1}};
  double s = 0.0, s2 = 0.0;
  std::size_t n = 0;
  for (std::uint64_t seed = 0; seed < 13; ++seed) {
    const auto p = he_init(arch, seed);
    for (double w : p.weights(0)) {
      s += w;
      s2 += w * w;
      ++n;
    }
  }
  const double mean = s / static_cast<double>(n);
  const double var = s2 / static_cast<double>(n) - mean * mean;
  EXPECT_GE(n, 100000u);
  EXPECT_NEAR(var, 0.25, 0.025);
}

TEST(Forward, HandEvaluation) {
  const auto p = tiny_net(2, -1, 3, 0);
  const std::vector<double> one{1.0}, zero{0.0};
  EXPECT_DOUBLE_EQ(forward(p, one), 3.0);
  EXPECT_DOUBLE_EQ(forward(p, zero), 0.0);
}

TEST(Forward, ZeroWeightsGiveFinalBias) {
  NetworkParameters p(NetworkArchitecture::fully_connected(7, 3, 5));
  for (double& v : p.values()) v = 0.0;
  p.biases(3)[0] = 1.75;
  const auto pts = uniform_sample(ParameterSpace(7), 10, 2);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(forward(p, pts.point(i)), 1.75);
}

TEST(Forward, ShapeMismatch) {
  const auto p = he_init(NetworkArchitecture::fully_connected(7, 2, 4), 0);
  EXPECT_THROW(forward(p, std::vector<double>(6, 0.0)), std::invalid_argument);
}

TEST(Forward, BatchMatchesSingle) {
  const auto p = he_init(NetworkArchitecture::fully_connected(7, 6, 10), 3);
  const auto pts = uniform_sample(ParameterSpace(7), 37, 4);
  const auto batch = forward_batch(p, pts.values());
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(batch[i], forward(p, pts.point(i)), 1e-12);
}

TEST(Forward, PositiveHomogeneityTwoLayers) {
  auto p = he_init(NetworkArchitecture{{4, 6, 1}}, 5);
  for (double& b : p.biases(0)) b = 0.1;
  auto q = p;
  const double c = 3.5;
  for (double& w : q.weights(0)) w *= c;
  for (double& b : q.biases(0)) b *= c;
  const auto pts = uniform_sample(ParameterSpace(4), 20, 6);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(forward(q, pts.point(i)), c * forward(p, pts.point(i)), 1e-12);
}

TEST(Forward, PiecewiseLinearAlongSegment) {
  const std::size_t width = 5, depth = 2;
  const auto p = he_init(NetworkArchitecture::fully_connected(3, depth, width), 8);
  const std::vector<double> a{0.1, 0.2, 0.9}, b{0.8, 0.7, 0.05};
  const int m = 2000;
  std::vector<double> f(m + 1);
  for (int i = 0; i <= m; ++i) {
    const double t = static_cast<double>(i) / m;
    std::vector<double> y(3);
    for (int j = 0; j < 3; ++j) y[j] = a[j] + t * (b[j] - a[j]);
    f[i] = forward(p, y);
  }
  std::size_t bends = 0;
  for (int i = 1; i < m; ++i)
    if (std::abs(f[i + 1] - 2 * f[i] + f[i - 1]) > 1e-10) ++bends;
  // each kink shows up in at most two consecutive second differences
  EXPECT_LE(bends, 2 * width * depth);
}

TEST(LossGradient, PerfectFitIsStationary) {
  const auto p = he_init(NetworkArchitecture::fully_connected(3, 2, 4), 1);
  const auto pts = uniform_sample(ParameterSpace(3), 8, 2);
  const auto targets = forward_batch(p, pts.values());
  const Dataset d(3, std::vector<double>(pts.values().begin(), pts.values().end()), targets);
  for (int lp : {1, 2}) {
    const auto r = loss_and_gradient(p, d, {lp, 2, 0.0});
    EXPECT_NEAR(r.loss, 0.0, 1e-24);
    for (double g : r.gradient) EXPECT_NEAR(g, 0.0, 1e-12);
  }
}

TEST(LossGradient, RegularizerOnly) {
  auto p = he_init(NetworkArchitecture::fully_connected(3, 2, 4), 1);
  for (std::size_t k = 0; k < 3; ++k)
    for (double& b : p.biases(k)) b = 0.3;
  const auto pts = uniform_sample(ParameterSpace(3), 8, 2);
  const Dataset d(3, std::vector<double>(pts.values().begin(), pts.values().end()), forward_batch(p, pts.values()));
  double l1 = 0.0, l2 = 0.0;
  for (std::size_t i = 0; i < p.values().size(); ++i) {
    if (!p.is_weight(i)) continue;
    l1 += std::abs(p.values()[i]);
    l2 += p.values()[i] * p.values()[i];
  }
  EXPECT_NEAR(loss_and_gradient(p, d, {2, 2, 1e-3}).loss, 1e-3 * l2, 1e-15);
  EXPECT_NEAR(loss_and_gradient(p, d, {2, 1, 1e-3}).loss, 1e-3 * l1, 1e-15);
}

TEST(LossGradient, MatchesFiniteDifferences) {
  const auto d = random_dataset(25, 7, 11);
  for (int lp : {1, 2}) {
    for (int q : {1, 2}) {
      for (std::uint64_t seed : {1, 2, 3}) {
        const auto p0 = he_init(NetworkArchitecture{{7, 10, 1}}, seed);
        auto p = p0;
        for (double& v : p.values()) v += 0.01;  // move biases off zero
        const LossSpec spec{lp, q, 1e-3};
        const auto analytic = loss_and_gradient(p, d, spec);
        const auto f = [&](std::span<const double> theta) {
          NetworkParameters t(p.architecture(), std::vector<double>(theta.begin(), theta.end()));
          return loss_and_gradient(t, d, spec).loss;
        };
        const auto fd = oracle::central_difference(f, p.values(), 1e-5);
        EXPECT_LT(max_relative_error(analytic.gradient, fd), 1e-4) << "p=" << lp << " q=" << q << " seed=" << seed;
      }
    }
  }
}

TEST(LossGradient, DeepNetMatchesFiniteDifferences) {
  const auto d = random_dataset(30, 7, 12);
  auto p = he_init(NetworkArchitecture::fully_connected(7, 6, 10), 4);
  for (double& v : p.values()) v += 0.02;
  const LossSpec spec{2, 2, 1e-4};
  const auto analytic = loss_and_gradient(p, d, spec);
  const auto f = [&](std::span<const double> theta) {
    NetworkParameters t(p.architecture(), std::vector<double>(theta.begin(), theta.end()));
    return loss_and_gradient(t, d, spec).loss;
  };
  EXPECT_LT(max_relative_error(analytic.gradient, oracle::central_difference(f, p.values(), 1e-5)), 1e-4);
}

TEST(Adam, FirstStepFromConstantGradient) {
  AdamState s(1);
  std::vector<double> theta{0.0};
  const std::vector<double> g{1.0};
  adam_step(s, theta, g, 0.01);
  EXPECT_NEAR(theta[0], -0.01 / (1.0 + 1e-8), 1e-16);
}

TEST(Adam, ZeroGradientIsFixedPoint) {
  AdamState s(3);
  std::vector<double> theta{1.0, -2.0, 3.0};
  const std::vector<double> g(3, 0.0);
  for (int i = 0; i < 100; ++i) adam_step(s, theta, g, 0.01);
  EXPECT_EQ(theta, (std::vector<double>{1.0, -2.0, 3.0}));
}

TEST(Adam, Deterministic) {
  const auto run = [] {
    AdamState s(2);
    std::vector<double> theta{0.5, 0.5};
    for (int i = 0; i < 50; ++i) {
      const std::vector<double> g{theta[0] - 1.0, 2.0 * theta[1]};
      adam_step(s, theta, g, 0.05);
    }
    return theta;
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, SizeMismatch) {
  AdamState s(2);
  std::vector<double> theta(3, 0.0);
  EXPECT_THROW(adam_step(s, theta, std::vector<double>(3, 0.0), 0.01), std::invalid_argument);
}

TEST(Train, ConstantTarget) {
  const auto pts = uniform_sample(ParameterSpace(7), 64, 3);
  const double c = 4.2;
  const Dataset d(7, std::vector<double>(pts.values().begin(), pts.values().end()), std::vector<double>(64, c));
  TrainingConfig cfg;
  cfg.epochs = 10000;
  const auto net = train(d, NetworkArchitecture::fully_connected(7, 6, 10), cfg);
  EXPECT_LT(net.report().training_error, 1e-3 * c);
}

TEST(Train, LossMostlyNonIncreasing) {
  const auto pts = uniform_sample(ParameterSpace(7), 64, 3);
  const Dataset d(7, std::vector<double>(pts.values().begin(), pts.values().end()), std::vector<double>(64, 2.0));
  TrainingConfig cfg;
  cfg.epochs = 2000;
  cfg.learning_rate = 1e-3;
  cfg.standardize_targets = false;
  cfg.validation_fraction = 0.0;
  cfg.record_loss_history = true;
  const auto net = train(d, NetworkArchitecture::fully_connected(7, 6, 10), cfg);
  const auto& h = net.loss_history();
  ASSERT_EQ(h.size(), 2000u);
  std::size_t ok = 0;
  for (std::size_t e = 1; e < h.size(); ++e) ok += h[e] <= h[e - 1];
  EXPECT_GE(static_cast<double>(ok) / static_cast<double>(h.size() - 1), 0.95);
}

TEST(Train, ReportsErrorsAndSplit) {
  const auto d = random_dataset(50, 3, 2);
  TrainingConfig cfg;
  cfg.epochs = 200;
  const auto net = train(d, NetworkArchitecture::fully_connected(3, 2, 6), cfg);
  EXPECT_EQ(net.report().samples, 45u);
  EXPECT_EQ(net.report().validation_samples, 5u);
  EXPECT_GE(net.report().training_error, 0.0);
  EXPECT_GE(net.report().validation_error, 0.0);
  EXPECT_NEAR(net.report().validation_gap, std::abs(net.report().training_error - net.report().validation_error), 1e-15);
}

TEST(Train, DeterministicPerSeed) {
  const auto d = random_dataset(40, 3, 5);
  TrainingConfig cfg;
  cfg.epochs = 300;
  cfg.seed = 77;
  const auto arch = NetworkArchitecture::fully_connected(3, 2, 6);
  const auto a = train(d, arch, cfg);
  const auto b = train(d, arch, cfg);
  EXPECT_TRUE(std::equal(a.parameters().values().begin(), a.parameters().values().end(),
                         b.parameters().values().begin()));
}

TEST(Train, LearnsSmoothFunction) {
  const auto pts = uniform_sample(ParameterSpace(2), 200, 9);
  std::vector<double> t(200);
  for (std::size_t i = 0; i < 200; ++i) t[i] = std::sin(3 * pts.point(i)[0]) + pts.point(i)[1];
  const Dataset d(2, std::vector<double>(pts.values().begin(), pts.values().end()), t);
  TrainingConfig cfg;
  cfg.epochs = 3000;
  const auto net = train(d, NetworkArchitecture::fully_connected(2, 3, 10), cfg);
  EXPECT_LT(net.report().training_error, 0.05);
  EXPECT_LT(net.report().validation_error, 0.1);
}

TEST(Train, SaveLoadRoundTrip) {
  const auto d = random_dataset(30, 3, 5);
  TrainingConfig cfg;
  cfg.epochs = 100;
  const auto net = train(d, NetworkArchitecture::fully_connected(3, 2, 4), cfg);
  const auto path = std::filesystem::temp_directory_path() / "mlml_nn_roundtrip.json";
  net.save(path);
  const auto back = TrainedNetwork::load(path);
  const auto pts = uniform_sample(ParameterSpace(3), 10, 1);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(back.predict(pts.point(i)), net.predict(pts.point(i)));
  EXPECT_EQ(back.report().training_error, net.report().training_error);
  std::filesystem::remove(path);
}

TEST(Train, LoadRejectsGarbage) {
  const auto path = std::filesystem::temp_directory_path() / "mlml_nn_garbage.json";
  { std::ofstream(path) << "{\"format\": 3}"; }
  EXPECT_THROW(TrainedNetwork::load(path), DataError);
  std::filesystem::remove(path);
}

TEST(Train, RejectsBadConfig) {
  const auto d = random_dataset(10, 2, 1);
  TrainingConfig cfg;
  cfg.loss_exponent = 3;
  EXPECT_THROW(train(d, NetworkArchitecture::fully_connected(2, 1, 2), cfg), std::invalid_argument);
  cfg.loss_exponent = 2;
  cfg.reg_weight = -1;
  EXPECT_THROW(train(d, NetworkArchitecture::fully_connected(2, 1, 2), cfg), std::invalid_argument);
}

TEST(RegressionError, Forms) {
  const std::vector<double> p{1, 2, 3}, t{1, 0, 0};
  EXPECT_NEAR(regression_error(p, t, 1), 5.0 / 3.0, 1e-15);
  EXPECT_NEAR(regression_error(p, t, 2), std::sqrt(13.0 / 3.0), 1e-15);
}
