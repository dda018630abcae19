// Acceptance run: one PASS/FAIL line per criterion.
//   mlml_acceptance [--output DIR] [--config FILE] [criterion ...]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mlml/csv.hpp"
#include "mlml/ensemble.hpp"
#include "mlml/gaussian_process.hpp"
#include "mlml/linalg.hpp"
#include "mlml/metrics.hpp"
#include "mlml/multilevel.hpp"
#include "mlml/neural_net.hpp"
#include "mlml/param_space.hpp"
#include "mlml/projectile.hpp"
#include "mlml/random.hpp"
#include "mlml_cli/commands.hpp"
#include "mlml_cli/config.hpp"
#include "oracles.hpp"

using namespace mlml;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1 -----------------------------------------------------------------------
Outcome ballistic(const cli::ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  ProjectileParameters p = cfg.model.nominal;
  p.drag_coefficient = 0.0;
  const double exact = oracle::ballistic_range(p.speed, p.launch_angle, p.height, p.gravity);
  const ResolutionLadder ladder(cfg.model.coarsest_step, cfg.model.finest_level, cfg.model.cost_exponent);
  const double fine = landing_range(p, ladder.step(ladder.finest_level()));
  const double rel = std::abs(fine - exact) / exact;
  double order = 0.0;
  double prev = std::abs(landing_range(p, ladder.step(0)) - exact);
  for (int l = 1; l <= ladder.finest_level(); ++l) {
    const double e = std::abs(landing_range(p, ladder.step(l)) - exact);
    order += std::log2(prev / e);
    prev = e;
  }
  order /= ladder.finest_level();
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = rel < 1e-3 && order >= 0.7 && order <= 1.3 && secs < 1.0;
  o.detail = "range " + num(fine) + " vs " + num(exact) + " (rel " + num(rel) + "), order " + num(order) + ", " +
             num(secs) + " s";
  return o;
}

// 2 -----------------------------------------------------------------------
Outcome telescoping(const cli::ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const ProjectileModel model = cfg.make_model();
  const int big_l = model.ladder().finest_level();
  std::vector<int> idx(big_l + 1);
  for (int l = 0; l <= big_l; ++l) idx[l] = l;
  const auto pts = uniform_sample(ParameterSpace(kProjectileDimension), 1000, derive_seed(cfg.seed, {11}));
  double worst = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double sum = model.evaluate(pts.point(i), 0);
    for (std::size_t k = 1; k < idx.size(); ++k) sum += evaluate_detail(model, pts.point(i), k, idx);
    const double truth = model.evaluate(pts.point(i), big_l);
    worst = std::max(worst, std::abs(sum - truth) / std::abs(truth));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 60.0, "max relative defect " + num(worst) + ", " + num(secs) + " s"};
}

// 3 -----------------------------------------------------------------------
Outcome variance_decay(const cli::ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const ProjectileModel model = cfg.make_model();
  const int big_l = model.ladder().finest_level();
  const auto pts = uniform_sample(ParameterSpace(kProjectileDimension), 2000, derive_seed(cfg.seed, {12}));
  std::vector<std::vector<double>> v(big_l + 1, std::vector<double>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (int l = 0; l <= big_l; ++l) v[l][i] = model.evaluate(pts.point(i), l);
  const double v0 = sample_variance(v[0]);
  bool ok = true;
  std::string detail = "V0 " + num(v0) + "; V(D_k)";
  double last = v0;
  for (int k = 1; k <= big_l; ++k) {
    std::vector<double> d(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) d[i] = v[k][i] - v[k - 1][i];
    const double vk = sample_variance(d);
    detail += " " + num(vk);
    ok = ok && vk < v0 && vk < last;
    last = vk;
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 300.0, detail + ", " + num(secs) + " s"};
}

// 4 -----------------------------------------------------------------------
Outcome bound_study(const cli::ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  auto study = cli::bound_study_config(cfg);
  study.repetitions = 10;
  study.validation_sets = 5;
  const auto rows = cumulative_error_study(cfg.make_model(), study);
  atomic_write_file(cfg.output_dir / "bound_study.csv", error_study_csv(rows));
  std::vector<double> n, eg;
  bool bound_ok = true, compression_ok = true;
  double cmin = 1e300, cmax = 0.0;
  for (const auto& r : rows) {
    n.push_back(static_cast<double>(r.size));
    eg.push_back(r.generalization_error);
    bound_ok = bound_ok && r.bound >= r.generalization_error;
    compression_ok = compression_ok && r.compression >= 1.0 && r.compression <= 20.0;
    cmin = std::min(cmin, r.compression);
    cmax = std::max(cmax, r.compression);
  }
  const double slope = loglog_slope(n, eg);
  const double secs = seconds_since(t0);
  const bool slope_ok = slope >= -1.1 && slope <= -0.5;
  return {slope_ok && bound_ok && compression_ok,
          "slope " + num(slope) + ", bound>=E_G " + (bound_ok ? "yes" : "no") + ", compression " + num(cmin) + ".." +
              num(cmax) + ", " + num(secs) + " s"};
}

// 5 -----------------------------------------------------------------------
Outcome sweep(const cli::ExperimentConfig& cfg, const cli::DataStore& data, const cli::Hyperparameters& h) {
  const auto t0 = std::chrono::steady_clock::now();
  auto rows = cli::run_sweep(cfg, data, h, std::cerr);
  atomic_write_file(cfg.output_dir / "sweep.csv", cli::sweep_csv(rows));
  std::size_t wins = 0;
  double best = 0.0;
  for (const auto& r : rows) {
    wins += r.gain > 1.0;
    best = std::max(best, r.gain);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.ml_cost < b.ml_cost; });
  const std::size_t half = rows.size() / 2;
  double low = 0.0;
  for (std::size_t i = 0; i < half; ++i) low += rows[i].gain;
  low /= static_cast<double>(std::max<std::size_t>(half, 1));
  const double frac = static_cast<double>(wins) / static_cast<double>(rows.size());
  const double secs = seconds_since(t0);
  return {rows.size() == 112 && frac >= 0.7 && low >= 1.5 && best >= 3.0,
          std::to_string(rows.size()) + " configs, gain>1 " + num(100 * frac) + "%, low-cost mean gain " + num(low) +
              ", max gain " + num(best) + ", " + num(secs) + " s"};
}

// 6 -----------------------------------------------------------------------
Outcome uq(const cli::ExperimentConfig& cfg, const cli::DataStore& data, const cli::Hyperparameters& h) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = cli::run_uq(cfg, data, h, std::cerr);
  atomic_write_file(cfg.output_dir / "uq.csv", cli::uq_csv(rows));
  std::size_t configs = 0, wins = 0;
  std::string detail;
  for (const auto& r : rows) {
    if (r.method != "ml2mc") continue;
    ++configs;
    // plain MC with the largest cost not above the multilevel cost
    const cli::UqRow* mc = nullptr;
    for (const auto& m : rows) {
      if (m.method == "mc" && m.cost <= r.cost && (!mc || m.cost > mc->cost)) mc = &m;
    }
    const bool win = mc && r.w1 < mc->w1;
    wins += win;
    detail += " " + r.config_id + ":" + num(r.w1) + (win ? "<" : ">=") + (mc ? num(mc->w1) : "n/a");
  }
  const double secs = seconds_since(t0);
  return {configs == 5 && wins >= 3, std::to_string(wins) + "/" + std::to_string(configs) + " beat MC;" + detail +
                                         ", " + num(secs) + " s"};
}

// 7 -----------------------------------------------------------------------
struct Suite {
  std::string name;
  std::function<bool()> body;
};

bool suite_gradient() {
  Rng rng(1);
  std::vector<double> in(20 * 7), t(20);
  for (double& v : in) v = rng.uniform();
  for (double& v : t) v = rng.normal();
  const Dataset d(7, in, t);
  for (int p : {1, 2})
    for (int q : {1, 2}) {
      auto params = he_init(NetworkArchitecture{{7, 10, 10, 1}}, 3);
      for (double& v : params.values()) v += 0.01;
      const LossSpec spec{p, q, 1e-3};
      const auto g = loss_and_gradient(params, d, spec).gradient;
      const auto fd = oracle::central_difference(
          [&](std::span<const double> th) {
            return loss_and_gradient(NetworkParameters(params.architecture(), {th.begin(), th.end()}), d, spec).loss;
          },
          params.values(), 1e-5);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (std::abs(g[i] - fd[i]) / std::max({std::abs(g[i]), std::abs(fd[i]), 1e-6}) >= 1e-4) return false;
      }
    }
  return true;
}

Dataset sampled(std::size_t n, std::size_t d, std::uint64_t seed, const std::function<double(std::span<const double>)>& f) {
  const auto pts = uniform_sample(ParameterSpace(d), n, seed);
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = f(pts.point(i));
  return Dataset(d, {pts.values().begin(), pts.values().end()}, t);
}

bool suite_gp_interpolation() {
  const auto d = sampled(200, 3, 5, [](auto y) { return std::sin(4 * y[0]) + y[1] * y[2]; });
  for (const auto& k : default_kernel_candidates()) {
    KernelSpec s = k;
    s.length_scale = 0.3;
    const auto gp = GPModel::fit(d, s);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (std::abs(gp.predict_mean(d.input(i)) - d.target(i)) >= 1e-6) return false;
    }
  }
  return true;
}

bool suite_gp_length_scale() {
  const auto pts = uniform_sample(ParameterSpace(2), 200, 13);
  const Dataset shell(2, {pts.values().begin(), pts.values().end()}, std::vector<double>(200, 0.0));
  DenseMatrix g = gram_matrix(shell, KernelSpec::rbf(0.3));
  for (std::size_t i = 0; i < 200; ++i) g(i, i) += kInitialJitter;
  const auto l = cholesky(g);
  Rng rng(14);
  std::vector<double> z(200), t(200, 0.0);
  for (double& v : z) v = rng.normal();
  for (std::size_t i = 0; i < 200; ++i)
    for (std::size_t j = 0; j <= i; ++j) t[i] += l(i, j) * z[j];
  const auto s = select_length_scale(Dataset(2, {pts.values().begin(), pts.values().end()}, t),
                                     KernelKind::kSquaredExponential, 0.0);
  return s.length_scale > 0.15 && s.length_scale < 0.6;
}

bool suite_wasserstein() {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a(7), b(7), c(7);
    for (auto* v : {&a, &b, &c})
      for (double& x : *v) x = rng.normal();
    if (wasserstein1(a, b) != wasserstein1(b, a)) return false;
    if (wasserstein1(a, c) > wasserstein1(a, b) + wasserstein1(b, c) + 1e-12) return false;
    if (wasserstein1(a, a) != 0.0 || wasserstein1(a, b) <= 0.0) return false;
  }
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(1 + rng.below(6)), b(1 + rng.below(6));
    for (double& x : a) x = rng.normal();
    for (double& x : b) x = rng.normal();
    if (std::abs(wasserstein1(a, b) - oracle::transport_w1(a, b)) > 1e-9) return false;
  }
  return true;
}

bool suite_allocation() {
  const std::vector<int> seq{0, 2, 4, 6};
  if (allocate_samples(seq, 2048, 128, 6).counts != std::vector<std::size_t>{2048, 813, 323, 128}) return false;
  const std::vector<std::vector<int>> seqs{{0, 6}, {0, 3, 6}, {0, 2, 4, 6}, {0, 1, 2, 3, 4, 5, 6}};
  for (const auto& s : seqs)
    for (std::size_t n0 : {256, 512, 1024, 2048})
      for (std::size_t nl : {4, 8, 16, 32, 64, 92, 128}) {
        if (allocate_samples(s, n0, nl, 6).counts != oracle::allocation_reference(s, n0, nl, 6)) return false;
      }
  return true;
}

bool suite_complexity() {
  return std::abs(build_sequence(6, {0, 6}).complexity() - 0.16) < 0.01 &&
         std::abs(build_sequence(6, {0, 3, 6}).complexity() - 0.67) < 0.01 &&
         build_sequence(6, {0, 2, 4, 6}).complexity() == 1.5 &&
         build_sequence(6, {0, 1, 2, 3, 4, 5, 6}).complexity() == 6.0;
}

bool suite_blend() {
  Rng rng(5);
  std::vector<double> nn(60), gp(60), z(60);
  for (std::size_t i = 0; i < 60; ++i) {
    nn[i] = rng.normal();
    gp[i] = rng.normal();
    z[i] = 0.3 * nn[i] + 0.7 * gp[i];
  }
  const auto w = blend_weights(nn, gp, z, 1000);
  return std::abs(w.nn - 0.3) < 1e-8 && std::abs(w.gp - 0.7) < 1e-8;
}

bool suite_sobol() {
  const auto one = sobol_sample(ParameterSpace(1), 3, 0);
  if (one.point(0)[0] != 0.5 || one.point(1)[0] != 0.75 || one.point(2)[0] != 0.25) return false;
  const auto seven = sobol_sample(ParameterSpace(7), 8, 0);
  const double row8[7] = {0.1875, 0.3125, 0.9375, 0.4375, 0.5625, 0.3125, 0.4375};
  for (std::size_t j = 0; j < 7; ++j)
    if (seven.point(7)[j] != row8[j]) return false;
  const auto all = sobol_sample(ParameterSpace(7), 300, 17);
  const auto tail = sobol_sample(ParameterSpace(7), 100, 217);
  return std::equal(tail.values().begin(), tail.values().end(), all.values().begin() + 200 * 7);
}

Outcome properties() {
  const std::vector<Suite> suites{{"gradient", suite_gradient},         {"gp-interpolation", suite_gp_interpolation},
                                  {"gp-length-scale", suite_gp_length_scale}, {"wasserstein", suite_wasserstein},
                                  {"allocation", suite_allocation},     {"complexity", suite_complexity},
                                  {"blend", suite_blend},               {"sobol", suite_sobol}};
  bool ok = true;
  std::string detail;
  for (const auto& s : suites) {
    const auto t0 = std::chrono::steady_clock::now();
    // run twice: results must not depend on anything but the fixed seeds
    const bool first = s.body();
    const bool second = s.body();
    const double secs = seconds_since(t0) / 2.0;
    const bool pass = first && second && secs < 60.0;
    ok = ok && pass;
    detail += " " + s.name + (pass ? ":ok" : ":FAIL") + "(" + num(secs) + "s)";
  }
  return {ok, detail.substr(1)};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path out = "acceptance_out";
  fs::path config = MLML_DEFAULT_CONFIG;
  std::set<int> wanted;
  try {
    for (int i = 1; i < argc; ++i) {
      const std::string a = argv[i];
      if (a == "--output" && i + 1 < argc) out = argv[++i];
      else if (a == "--config" && i + 1 < argc) config = argv[++i];
      else wanted.insert(std::stoi(a));
    }
  } catch (const std::exception&) {
    std::cerr << "usage: mlml_acceptance [--output DIR] [--config FILE] [criterion ...]\n";
    return 2;
  }
  if (wanted.empty()) wanted = {1, 2, 3, 4, 5, 6, 7};

  cli::ExperimentConfig cfg;
  try {
    cfg = cli::load_config(config);
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  cfg.output_dir = out;
  if (const char* w = std::getenv("MLML_WORKERS")) cfg.workers = std::stoul(w);
  fs::create_directories(out);

  std::optional<cli::DataStore> data;
  std::optional<cli::Hyperparameters> hyper;
  auto prepare = [&] {
    if (data) return;
    data = cli::generate_data(cfg);
    hyper = cli::resolve_hyperparameters(cfg, *data, std::cerr);
  };

  int failures = 0;
  std::ostringstream summary;
  for (int c : wanted) {
    Outcome o;
    try {
      switch (c) {
        case 1: o = ballistic(cfg); break;
        case 2: o = telescoping(cfg); break;
        case 3: o = variance_decay(cfg); break;
        case 4: o = bound_study(cfg); break;
        case 5: prepare(); o = sweep(cfg, *data, *hyper); break;
        case 6: prepare(); o = uq(cfg, *data, *hyper); break;
        case 7: o = properties(); break;
        default: o = {false, "unknown criterion"};
      }
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    const std::string line = "criterion " + std::to_string(c) + ": " + (o.pass ? "PASS" : "FAIL") + " (" + o.detail + ")";
    std::cout << line << std::endl;
    summary << line << '\n';
  }
  atomic_write_file(out / "acceptance.txt", summary.str());
  return failures == 0 ? 0 : 1;
}
