#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlml/level_model.hpp"
#include "mlml/neural_net.hpp"
#include "mlml/uq.hpp"

namespace mlml {

/// (sum |pred - truth|^p)^(1/p) / (sum |truth|^p)^(1/p)
double prediction_error(std::span<const double> predictions, std::span<const double> truth, int p);

/// e_single / e_multi
double gain(double e_single, double e_multi);

/// Exact 1-D Wasserstein-1 distance between uniformly weighted atom lists,
/// integrating the quantile difference over the merged breakpoints
/// i/n and j/m.
double wasserstein1(std::span<const double> a, std::span<const double> b);
double wasserstein1(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

double sample_mean(std::span<const double> values);
/// 1/(N-1) normalization; throws TooFewAtomsError below two values.
double sample_variance(std::span<const double> values);
double sample_std(std::span<const double> values);

struct BoundReport {
  double training_error = 0.0;
  double validation_gap = 0.0;
  double map_std = 0.0;
  double surrogate_std = 0.0;
  std::size_t samples = 0;
  double bound = 0.0;
  std::optional<double> measured;
  std::optional<double> compression;  // bound / measured
};

/// E_T + E_TV + 2 sqrt(2) (std_map + std_surrogate) / sqrt(N)
BoundReport generalization_bound(double training_error, double validation_gap, double map_std, double surrogate_std,
                                 std::size_t samples, std::optional<double> measured = std::nullopt);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

struct ErrorStudyConfig {
  std::vector<std::size_t> sizes{16, 32, 64, 128, 256, 512, 1024};
  std::size_t repetitions = 10;     // K retrainings on fresh training sets
  std::size_t validation_sets = 5;  // validation realizations per retraining
  std::size_t pool_size = 2000;     // training set + test set
  std::size_t map_std_samples = 2000;
  std::size_t surrogate_std_samples = 1000;
  std::size_t hidden_layers = 6;
  std::size_t width = 10;
  TrainingConfig training{1, 2, 1e-6, 0.01, 10000, 0, 0.0, true, false};
  int level = 6;
  std::uint64_t seed = 0;
  std::size_t workers = 0;

  void validate() const;
};

struct ErrorStudyRow {
  std::size_t size = 0;
  double training_error = 0.0;        // mean over retrainings
  double validation_error = 0.0;      // mean over retrainings and validation sets
  double validation_gap = 0.0;        // mean |E_T - E_V|
  double generalization_error = 0.0;  // mean test error on the rest of the pool
  double bound = 0.0;
  double compression = 0.0;
  double map_std = 0.0;
  double surrogate_std = 0.0;
};

/// For each size N and retraining r: a fresh pool of `pool_size` points,
/// the first N for training and the rest as test set, plus
/// `validation_sets` fresh validation sets of N points. Errors use the
/// training loss exponent. std(map) comes from `map_std_samples` model runs
/// and std(surrogate) from `surrogate_std_samples` evaluations of each
/// trained network, averaged over retrainings.
std::vector<ErrorStudyRow> cumulative_error_study(const LevelModel& model, const ErrorStudyConfig& config);

/// Header: size,E_T,E_V,E_TV,E_G,bound,compression
std::string error_study_csv(std::span<const ErrorStudyRow> rows);

}  // namespace mlml
