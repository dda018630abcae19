#include "mlml/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mlml/csv.hpp"
#include "mlml/parallel.hpp"
#include "mlml/random.hpp"

namespace mlml {

double prediction_error(std::span<const double> predictions, std::span<const double> truth, int p) {
  if (p != 1 && p != 2) throw std::invalid_argument("prediction_error: p must be 1 or 2");
  if (truth.empty()) throw std::invalid_argument("prediction_error: empty test set");
  if (predictions.size() != truth.size()) throw std::invalid_argument("prediction_error: size mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = std::abs(predictions[i] - truth[i]);
    const double t = std::abs(truth[i]);
    num += p == 2 ? e * e : e;
    den += p == 2 ? t * t : t;
  }
  if (den == 0.0) throw std::domain_error("prediction_error: truth has zero norm");
  return p == 2 ? std::sqrt(num / den) : num / den;
}

double gain(double e_single, double e_multi) {
  if (!(e_multi > 0.0)) throw std::domain_error("gain: multilevel error must be > 0");
  return e_single / e_multi;
}

double wasserstein1(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein1: empty measure");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  // Breakpoints i*m and j*n on the integer grid [0, n*m].
  const std::uint64_t n = x.size();
  const std::uint64_t m = y.size();
  std::uint64_t i = 0, j = 0, pos = 0;
  double sum = 0.0;
  while (i < n && j < m) {
    const std::uint64_t next = std::min((i + 1) * m, (j + 1) * n);
    sum += std::abs(x[i] - y[j]) * static_cast<double>(next - pos);
    pos = next;
    if (next == (i + 1) * m) ++i;
    if (next == (j + 1) * n) ++j;
  }
  return sum / (static_cast<double>(n) * static_cast<double>(m));
}

double wasserstein1(const EmpiricalMeasure& a, const EmpiricalMeasure& b) { return wasserstein1(a.atoms, b.atoms); }

double sample_mean(std::span<const double> values) {
  if (values.empty()) throw TooFewAtomsError("mean of an empty sample");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) throw TooFewAtomsError("variance needs at least two values");
  const double mean = sample_mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size() - 1);
}

double sample_std(std::span<const double> values) { return std::sqrt(sample_variance(values)); }

BoundReport generalization_bound(double training_error, double validation_gap, double map_std, double surrogate_std,
                                 std::size_t samples, std::optional<double> measured) {
  if (samples == 0) throw std::invalid_argument("generalization_bound: N must be >= 1");
  if (!(training_error >= 0.0 && validation_gap >= 0.0 && map_std >= 0.0 && surrogate_std >= 0.0)) {
    throw std::invalid_argument("generalization_bound: inputs must be >= 0");
  }
  BoundReport r;
  r.training_error = training_error;
  r.validation_gap = validation_gap;
  r.map_std = map_std;
  r.surrogate_std = surrogate_std;
  r.samples = samples;
  r.bound = training_error + validation_gap +
            2.0 * std::numbers::sqrt2 * (map_std + surrogate_std) / std::sqrt(static_cast<double>(samples));
  if (measured) {
    r.measured = measured;
    if (*measured > 0.0) r.compression = r.bound / *measured;
  }
  return r;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 matching points");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

void ErrorStudyConfig::validate() const {
  training.validate();
  if (sizes.empty()) throw std::invalid_argument("error study: no sizes");
  for (std::size_t n : sizes) {
    if (n < 2 || n >= pool_size) throw std::invalid_argument("error study: sizes must lie in [2, pool_size)");
  }
  if (repetitions == 0 || validation_sets == 0) {
    throw std::invalid_argument("error study: repetitions and validation sets must be >= 1");
  }
  if (map_std_samples < 2 || surrogate_std_samples < 2) {
    throw std::invalid_argument("error study: std estimates need >= 2 samples");
  }
}

namespace {

std::vector<double> evaluate_all(const LevelModel& model, int level, const SampleSet& pts) {
  std::vector<double> v(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) v[i] = model.evaluate(pts.point(i), level);
  return v;
}

struct RunResult {
  double training = 0.0;
  double validation = 0.0;
  double gap = 0.0;
  double test = 0.0;
  double surrogate_std = 0.0;
};

}  // namespace

std::vector<ErrorStudyRow> cumulative_error_study(const LevelModel& model, const ErrorStudyConfig& config) {
  config.validate();
  const ParameterSpace space(model.dimension());
  const std::size_t d = model.dimension();
  const int p = config.training.loss_exponent;
  const auto arch = NetworkArchitecture::fully_connected(d, config.hidden_layers, config.width);

  const SampleSet map_pts = uniform_sample(space, config.map_std_samples, derive_seed(config.seed, {3}));
  const double map_std = sample_std(evaluate_all(model, config.level, map_pts));
  const SampleSet probe = uniform_sample(space, config.surrogate_std_samples, derive_seed(config.seed, {4}));

  const std::size_t sizes = config.sizes.size();
  const std::size_t k_runs = config.repetitions;
  std::vector<RunResult> runs(sizes * k_runs);
  // Largest sizes first so the pool finishes evenly.
  std::vector<std::size_t> order(runs.size());
  for (std::size_t t = 0; t < order.size(); ++t) order[t] = t;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return config.sizes[a / k_runs] > config.sizes[b / k_runs]; });

  parallel_for(runs.size(), config.workers ? config.workers : default_worker_count(), [&](std::size_t t) {
    const std::size_t task = order[t];
    const std::size_t n = config.sizes[task / k_runs];
    const std::size_t r = task % k_runs;
    const SampleSet pool = uniform_sample(space, config.pool_size, derive_seed(config.seed, {1, n, r}));
    const std::vector<double> truth = evaluate_all(model, config.level, pool);
    const std::vector<double> pool_inputs(pool.values().begin(), pool.values().end());
    const Dataset training(d, std::vector<double>(pool_inputs.begin(), pool_inputs.begin() + n * d),
                           std::vector<double>(truth.begin(), truth.begin() + n));
    TrainingConfig tc = config.training;
    tc.seed = derive_seed(config.seed, {2, n, r});
    const TrainedNetwork net = train(training, Dataset(), arch, tc);

    RunResult& out = runs[task];
    out.training = net.report().training_error;
    const auto test_pred = net.predict_batch(std::span<const double>(pool_inputs).subspan(n * d));
    out.test = regression_error(test_pred, std::span<const double>(truth).subspan(n), p);
    double v_sum = 0.0, gap_sum = 0.0;
    for (std::size_t v = 0; v < config.validation_sets; ++v) {
      const SampleSet vs = uniform_sample(space, n, derive_seed(config.seed, {5, n, r, v}));
      const double ev = regression_error(net.predict_batch(vs.values()), evaluate_all(model, config.level, vs), p);
      v_sum += ev;
      gap_sum += std::abs(out.training - ev);
    }
    out.validation = v_sum / static_cast<double>(config.validation_sets);
    out.gap = gap_sum / static_cast<double>(config.validation_sets);
    out.surrogate_std = sample_std(net.predict_batch(probe.values()));
  });

  std::vector<ErrorStudyRow> rows;
  for (std::size_t s = 0; s < sizes; ++s) {
    ErrorStudyRow row;
    row.size = config.sizes[s];
    for (std::size_t r = 0; r < k_runs; ++r) {
      const RunResult& x = runs[s * k_runs + r];
      row.training_error += x.training;
      row.validation_error += x.validation;
      row.validation_gap += x.gap;
      row.generalization_error += x.test;
      row.surrogate_std += x.surrogate_std;
    }
    const double k = static_cast<double>(k_runs);
    row.training_error /= k;
    row.validation_error /= k;
    row.validation_gap /= k;
    row.generalization_error /= k;
    row.surrogate_std /= k;
    row.map_std = map_std;
    const BoundReport b = generalization_bound(row.training_error, row.validation_gap, map_std, row.surrogate_std,
                                               row.size, row.generalization_error);
    row.bound = b.bound;
    row.compression = b.compression.value_or(0.0);
    rows.push_back(row);
  }
  return rows;
}

std::string error_study_csv(std::span<const ErrorStudyRow> rows) {
  std::ostringstream os;
  os << "size,E_T,E_V,E_TV,E_G,bound,compression\n";
  for (const auto& r : rows) {
    os << r.size << ',' << format_double(r.training_error) << ',' << format_double(r.validation_error) << ','
       << format_double(r.validation_gap) << ',' << format_double(r.generalization_error) << ','
       << format_double(r.bound) << ',' << format_double(r.compression) << '\n';
  }
  return os.str();
}

}  // namespace mlml
