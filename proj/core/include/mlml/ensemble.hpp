#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "mlml/dataset.hpp"
#include "mlml/gaussian_process.hpp"
#include "mlml/neural_net.hpp"

namespace mlml {

/// NN cells are iterated q ascending, then lambda ascending, then seed index;
/// that order is also the tie-break order.
struct HyperparameterGrid {
  std::vector<int> reg_exponents{1, 2};
  std::vector<double> reg_weights{5e-7, 1e-6, 5e-6, 1e-5, 5e-5, 1e-4};
  std::size_t init_seeds = 5;
  std::vector<KernelSpec> kernels = default_kernel_candidates();  // empty: no GP member

  std::size_t cell_count() const { return reg_exponents.size() * reg_weights.size() * init_seeds; }
  void validate() const;
};

enum class BlendMode {
  kAuto,    // least squares above the sample threshold, else 0.5 / 0.5
  kNnOnly,  // alpha_NN = 1, alpha_GP = 0, no GP is trained
};

struct EnsembleConfig {
  HyperparameterGrid grid;
  std::size_t hidden_layers = 6;
  std::size_t width = 10;
  TrainingConfig training;  // p, learning rate, epochs, validation fraction; q/lambda/seed come from the grid
  BlendMode blend = BlendMode::kAuto;
  std::size_t least_squares_threshold = 500;
  std::size_t workers = 0;  // 0: default_worker_count()
};

struct GridCellResult {
  std::size_t cell = 0;
  int reg_exponent = 2;
  double reg_weight = 0.0;
  std::size_t seed_index = 0;
  std::uint64_t seed = 0;
  double training_error = 0.0;
  double validation_error = 0.0;
};

struct BlendWeights {
  double nn = 0.5;
  double gp = 0.5;
  bool least_squares = false;
};

/// Least-squares weights over the validation predictions when n_train
/// exceeds the threshold (falling back to 0.5 / 0.5 if the system is
/// singular), otherwise 0.5 / 0.5.
BlendWeights blend_weights(std::span<const double> nn_predictions, std::span<const double> gp_predictions,
                           std::span<const double> targets, std::size_t n_train, std::size_t threshold = 500);

class SurrogateEnsemble {
 public:
  SurrogateEnsemble(std::optional<TrainedNetwork> nn, std::optional<GPModel> gp, double alpha_nn, double alpha_gp);

  double predict(std::span<const double> y) const;
  std::vector<double> predict_batch(std::span<const double> inputs) const;

  const std::optional<TrainedNetwork>& nn() const noexcept { return nn_; }
  const std::optional<GPModel>& gp() const noexcept { return gp_; }
  double alpha_nn() const noexcept { return alpha_nn_; }
  double alpha_gp() const noexcept { return alpha_gp_; }

  const std::vector<GridCellResult>& grid_log() const noexcept { return grid_log_; }
  void set_grid_log(std::vector<GridCellResult> log) { grid_log_ = std::move(log); }
  double validation_error() const noexcept { return validation_error_; }
  void set_validation_error(double e) { validation_error_ = e; }

  /// Directory with manifest.json, nn.json, gp.json and grid.csv.
  void save(const std::filesystem::path& dir) const;
  static SurrogateEnsemble load(const std::filesystem::path& dir);

 private:
  std::optional<TrainedNetwork> nn_;
  std::optional<GPModel> gp_;
  double alpha_nn_;
  double alpha_gp_;
  double validation_error_ = 0.0;
  std::vector<GridCellResult> grid_log_;
};

/// Splits off the validation fraction once, trains every NN cell on the
/// remainder, keeps the cell with the smallest validation error, selects a
/// GP kernel on the same split and blends the two.
SurrogateEnsemble ensemble_train(const Dataset& data, const EnsembleConfig& config, std::uint64_t seed);

std::string grid_log_csv(std::span<const GridCellResult> log);

}  // namespace mlml
