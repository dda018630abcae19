#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlml/dataset.hpp"

namespace mlml {

/// Layer widths d_1..d_K of a fully connected network; d_1 is the input
/// dimension and d_K = 1. There are K-1 affine maps and K-2 hidden layers.
struct NetworkArchitecture {
  std::vector<std::size_t> widths;

  static NetworkArchitecture fully_connected(std::size_t input_dimension, std::size_t hidden_layers,
                                             std::size_t width);

  std::size_t input_dimension() const { return widths.front(); }
  std::size_t affine_count() const { return widths.size() - 1; }

  /// M = sum_k (d_k + 1) d_{k+1}
  std::size_t parameter_count() const;

  void validate() const;

  bool operator==(const NetworkArchitecture&) const = default;
};

/// Flat parameter vector; layer k stores W_k (d_{k+1} x d_k, row-major)
/// followed by b_k.
class NetworkParameters {
 public:
  explicit NetworkParameters(NetworkArchitecture architecture);
  NetworkParameters(NetworkArchitecture architecture, std::vector<double> values);

  const NetworkArchitecture& architecture() const noexcept { return architecture_; }

  std::span<double> weights(std::size_t k);
  std::span<const double> weights(std::size_t k) const;
  std::span<double> biases(std::size_t k);
  std::span<const double> biases(std::size_t k) const;

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  /// True for entries belonging to a weight matrix (the regularized set).
  bool is_weight(std::size_t index) const;

 private:
  NetworkArchitecture architecture_;
  std::vector<double> values_;
  std::vector<std::size_t> offsets_;  // start of W_k for each k, plus total
};

/// Weights ~ N(0, 2 / fan_in), biases zero.
NetworkParameters he_init(const NetworkArchitecture& architecture, std::uint64_t seed);

/// C_K o relu o C_{K-1} o ... o relu o C_1 (y).
double forward(const NetworkParameters& params, std::span<const double> y);

/// Row-major inputs (N x d_1) -> N outputs.
std::vector<double> forward_batch(const NetworkParameters& params, std::span<const double> inputs);

struct LossSpec {
  int loss_exponent = 2;  // p in {1, 2}
  int reg_exponent = 2;   // q in {1, 2}
  double reg_weight = 0.0;
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// Objective (1/N) sum |target - net(y)|^p + lambda * sum_{weights} |w|^q
/// and its exact (sub)gradient; sign(0) is taken as 0 for p = 1 and q = 1.
LossAndGradient loss_and_gradient(const NetworkParameters& params, const Dataset& data, const LossSpec& spec);

/// Reusable buffers for repeated full-batch gradient evaluations on one dataset.
class FullBatchGradient {
 public:
  FullBatchGradient(const NetworkArchitecture& architecture, const Dataset& data);

  /// Returns the objective and writes its gradient into `gradient`.
  double evaluate(const NetworkParameters& params, const LossSpec& spec, std::span<double> gradient);

 private:
  NetworkArchitecture architecture_;
  std::size_t samples_;
  std::vector<double> targets_;
  std::vector<std::vector<double>> activations_;  // layer k: d_k x N (feature-major)
  std::vector<double> delta_;
  std::vector<double> delta_prev_;
};

struct AdamHyperparameters {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  explicit AdamState(std::size_t size, AdamHyperparameters hyper = {});

  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;
  AdamHyperparameters hyper;
};

/// One bias-corrected ADAM update of `params` in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> gradient,
               double learning_rate);

struct TrainingConfig {
  int loss_exponent = 2;
  int reg_exponent = 2;
  double reg_weight = 0.0;
  double learning_rate = 0.01;
  std::size_t epochs = 10000;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  bool standardize_targets = true;
  bool record_loss_history = false;

  LossSpec loss_spec() const { return {loss_exponent, reg_exponent, reg_weight}; }
  void validate() const;
};

/// Errors are (mean |residual|^p)^(1/p) in the units of the targets.
struct ErrorReport {
  double training_error = 0.0;
  double validation_error = 0.0;
  double validation_gap = 0.0;
  std::size_t samples = 0;
  std::size_t validation_samples = 0;
};

/// (mean |prediction - target|^p)^(1/p)
double regression_error(std::span<const double> predictions, std::span<const double> targets, int p);

class TrainedNetwork {
 public:
  TrainedNetwork(NetworkParameters params, double target_shift, double target_scale, TrainingConfig config,
                 ErrorReport report);

  double predict(std::span<const double> y) const;
  std::vector<double> predict_batch(std::span<const double> inputs) const;

  const NetworkParameters& parameters() const noexcept { return params_; }
  const TrainingConfig& config() const noexcept { return config_; }
  const ErrorReport& report() const noexcept { return report_; }
  double target_shift() const noexcept { return shift_; }
  double target_scale() const noexcept { return scale_; }

  const std::vector<double>& loss_history() const noexcept { return loss_history_; }
  void set_loss_history(std::vector<double> history) { loss_history_ = std::move(history); }

  nlohmann::json to_json() const;
  static TrainedNetwork from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static TrainedNetwork load(const std::filesystem::path& path);

 private:
  NetworkParameters params_;
  double shift_;
  double scale_;
  TrainingConfig config_;
  ErrorReport report_;
  std::vector<double> loss_history_;
};

/// Splits off the validation fraction (seeded shuffle), then trains.
TrainedNetwork train(const Dataset& data, const NetworkArchitecture& architecture, const TrainingConfig& config);

/// Trains on `training` for config.epochs full-batch ADAM epochs and reports
/// errors on both sets (the validation set may be empty).
TrainedNetwork train(const Dataset& training, const Dataset& validation, const NetworkArchitecture& architecture,
                     const TrainingConfig& config);

}  // namespace mlml
