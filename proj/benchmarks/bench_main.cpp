#include <benchmark/benchmark.h>

#include <vector>

#include "mlml/gaussian_process.hpp"
#include "mlml/linalg.hpp"
#include "mlml/metrics.hpp"
#include "mlml/neural_net.hpp"
#include "mlml/param_space.hpp"
#include "mlml/projectile.hpp"
#include "mlml/random.hpp"

namespace {

mlml::Dataset projectile_data(std::size_t n, int level) {
  const mlml::ProjectileModel model;
  const auto pts = mlml::uniform_sample(mlml::ParameterSpace(7), n, 11);
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = model.evaluate(pts.point(i), level);
  return {7, std::vector<double>(pts.values().begin(), pts.values().end()), std::move(t)};
}

// One full-batch gradient plus ADAM step, i.e. one training epoch.
void BM_NetworkEpoch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto data = projectile_data(n, 0);
  const auto arch = mlml::NetworkArchitecture::fully_connected(7, 6, 10);
  auto params = mlml::he_init(arch, 1);
  mlml::FullBatchGradient fb(arch, data);
  mlml::AdamState adam(params.values().size());
  std::vector<double> grad(params.values().size());
  const mlml::LossSpec spec{2, 2, 1e-6};
  for (auto _ : state) {
    benchmark::DoNotOptimize(fb.evaluate(params, spec, grad));
    mlml::adam_step(adam, params.values(), grad, 1e-3);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_NetworkEpoch)->Arg(16)->Arg(256)->Arg(2048);

void BM_Train(benchmark::State& state) {
  const auto data = projectile_data(static_cast<std::size_t>(state.range(0)), 0);
  const auto arch = mlml::NetworkArchitecture::fully_connected(7, 6, 10);
  mlml::TrainingConfig config;
  config.epochs = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(mlml::train(data, arch, config));
}
BENCHMARK(BM_Train)->Arg(16)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_LandingRange(benchmark::State& state) {
  const mlml::ProjectileModel model;
  const std::vector<double> y(7, 0.5);
  const int level = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(model.evaluate(y, level));
}
BENCHMARK(BM_LandingRange)->Arg(0)->Arg(6);

void BM_Cholesky(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto pts = mlml::uniform_sample(mlml::ParameterSpace(7), n, 3);
  const mlml::Dataset data(7, std::vector<double>(pts.values().begin(), pts.values().end()), std::vector<double>(n));
  auto g = mlml::gram_matrix(data, mlml::KernelSpec::matern(1.5, 0.5));
  for (std::size_t i = 0; i < n; ++i) g(i, i) += 1e-8;
  for (auto _ : state) benchmark::DoNotOptimize(mlml::cholesky(g));
}
BENCHMARK(BM_Cholesky)->Arg(128)->Arg(512);

void BM_Wasserstein(benchmark::State& state) {
  mlml::Rng rng(5);
  std::vector<double> a(20000), b(static_cast<std::size_t>(state.range(0)));
  for (double& v : a) v = rng.normal();
  for (double& v : b) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(mlml::wasserstein1(a, b));
}
BENCHMARK(BM_Wasserstein)->Arg(1000)->Arg(20000);

}  // namespace

BENCHMARK_MAIN();
