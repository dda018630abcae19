#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlml/dataset.hpp"
#include "mlml/linalg.hpp"

namespace mlml {

enum class KernelKind { kSquaredExponential, kMatern };

struct KernelSpec {
  KernelKind kind = KernelKind::kSquaredExponential;
  double nu = 2.5;  // Matern only; one of 0.5, 1.5, 2.5
  double length_scale = 1.0;

  static KernelSpec rbf(double length_scale) { return {KernelKind::kSquaredExponential, 0.0, length_scale}; }
  static KernelSpec matern(double nu, double length_scale) { return {KernelKind::kMatern, nu, length_scale}; }

  std::string name() const;  // "rbf", "matern0.5", ...
  void validate() const;
  bool operator==(const KernelSpec&) const = default;
};

class UnsupportedKernelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DuplicateInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

double kernel_eval(const KernelSpec& spec, std::span<const double> a, std::span<const double> b);

/// Kernel as a function of the distance r.
double kernel_of_distance(const KernelSpec& spec, double r);

inline constexpr double kInitialJitter = 1e-10;
inline constexpr double kMaxJitter = 1e-6;

/// Zero-mean noise-free GP regression on centered targets.
class GPModel {
 public:
  /// Factorizes G + jitter I, starting at 1e-10 and escalating by 10 up to
  /// 1e-6; throws NotPositiveDefiniteError if that still fails. With
  /// `center_targets` the target mean is subtracted before the fit and added
  /// back in predictions.
  static GPModel fit(const Dataset& data, const KernelSpec& spec, bool center_targets = true);

  struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
  };

  Prediction predict(std::span<const double> y) const;
  double predict_mean(std::span<const double> y) const { return predict(y).mean; }
  std::vector<double> predict_batch(std::span<const double> inputs) const;

  /// 1/2 z^T A^{-1} z + 1/2 log det A + n/2 log(2 pi), A = G + jitter I.
  double negative_log_marginal_likelihood() const;

  const KernelSpec& kernel() const noexcept { return spec_; }
  double jitter() const noexcept { return jitter_; }
  double target_mean() const noexcept { return mean_; }
  bool centered() const noexcept { return center_; }
  const DenseMatrix& factor() const noexcept { return factor_; }
  const Dataset& training_data() const noexcept { return data_; }

  nlohmann::json to_json() const;
  /// Refits from the stored inputs and targets.
  static GPModel from_json(const nlohmann::json& j);

 private:
  Dataset data_;
  KernelSpec spec_;
  bool center_ = true;
  double mean_ = 0.0;
  double jitter_ = kInitialJitter;
  DenseMatrix factor_;
  std::vector<double> centered_;
  std::vector<double> weights_;  // A^{-1} (z - mean)
};

DenseMatrix gram_matrix(const Dataset& data, const KernelSpec& spec);

struct LengthScaleSearch {
  double length_scale = 1.0;
  double nlml = 0.0;
  std::vector<double> grid;
  std::vector<double> grid_nlml;  // +inf where the fit failed
};

inline constexpr std::size_t kLengthScaleGridPoints = 25;

/// 25-point log grid on [1e-2, 1e1], then golden-section refinement in the
/// bracket around an interior grid minimum. The refined value is kept only
/// if its NLML is no larger than the grid minimum.
LengthScaleSearch select_length_scale(const Dataset& data, KernelKind kind, double nu, bool center_targets = true);

/// RBF, Matern 0.5, Matern 1.5, Matern 2.5.
std::vector<KernelSpec> default_kernel_candidates();

struct KernelSelection {
  KernelSpec spec;
  double validation_error = 0.0;
  std::vector<KernelSpec> candidates;  // with their selected length scales
  std::vector<double> candidate_errors;
};

/// Picks the candidate (each with its NLML-selected length scale) whose fit
/// on `training` has the smallest mean absolute error on `validation`; ties
/// go to the earlier candidate. Candidates whose fit fails are skipped.
KernelSelection select_kernel(const Dataset& training, const Dataset& validation,
                              const std::vector<KernelSpec>& candidates = default_kernel_candidates());

}  // namespace mlml
