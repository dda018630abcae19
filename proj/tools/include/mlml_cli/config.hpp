#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlml/ensemble.hpp"
#include "mlml/gaussian_process.hpp"
#include "mlml/projectile.hpp"

namespace mlml::cli {

inline constexpr int kSchemaVersion = 1;

/// Invalid or unreadable configuration; the message carries "file:line: ".
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelSection {
  ProjectileParameters nominal{};
  double epsilon = 0.1;
  double coarsest_step = 0.08;
  int finest_level = 6;
  double cost_exponent = 1.0;
  DragModel drag = DragModel::kHorizontal;
};

enum class PointProvenance { kRandom, kSobol };

struct SamplingSection {
  PointProvenance provenance = PointProvenance::kRandom;
  std::size_t pool_size = 8192;
  std::size_t test_size = 2000;
};

enum class SearchMode {
  kFixed,      // use fixed_reg_exponent / fixed_reg_weight everywhere
  kReference,  // grid search on the base map and D_ref, reused for every detail
  kPerDetail,  // full grid for every surrogate
};

struct TrainingSection {
  std::size_t hidden_layers = 6;
  std::size_t width = 10;
  int loss_exponent = 2;
  double learning_rate = 0.01;
  std::size_t epochs = 10000;
  double validation_fraction = 0.1;
  std::size_t init_seeds = 5;
  std::vector<int> reg_exponents{1, 2};
  std::vector<double> reg_weights{5e-7, 1e-6, 5e-6, 1e-5, 5e-5, 1e-4};
  std::vector<KernelSpec> kernels = default_kernel_candidates();
  BlendMode blend = BlendMode::kNnOnly;
  std::size_t least_squares_threshold = 500;
  SearchMode search = SearchMode::kReference;
  std::size_t search_samples = 512;
  int fixed_reg_exponent = 2;
  double fixed_reg_weight = 5e-7;
};

struct MultilevelSection {
  std::vector<std::vector<int>> sequences{{0, 6}, {0, 3, 6}, {0, 2, 4, 6}, {0, 1, 2, 3, 4, 5, 6}};
  std::vector<std::size_t> coarse_counts{256, 512, 1024, 2048};
  std::vector<std::size_t> fine_counts{4, 8, 16, 32, 64, 92, 128};
};

struct UqConfiguration {
  std::size_t coarse = 0;
  std::size_t fine = 0;
  std::vector<int> sequence;
};

struct UqSection {
  std::size_t evaluation_samples = 10000;
  double reference_step = 0.001;
  std::size_t reference_samples = 20000;
  std::size_t mc_repetitions = 20;
  std::vector<std::size_t> sl2mc_samples{9, 15, 21, 64, 191, 322};
  std::vector<UqConfiguration> configurations{{256, 4, {0, 6}},
                                              {256, 8, {0, 3, 6}},
                                              {2048, 8, {0, 3, 6}},
                                              {2048, 32, {0, 3, 6}},
                                              {2048, 64, {0, 2, 4, 6}}};
};

struct BoundStudySection {
  std::vector<std::size_t> sizes{16, 32, 64, 128, 256, 512, 1024};
  std::size_t repetitions = 10;
  std::size_t validation_sets = 5;
  std::size_t full_repetitions = 60;
  std::size_t full_validation_sets = 30;
  bool full_fidelity = false;
  std::size_t pool_size = 2000;
  int loss_exponent = 1;
  int reg_exponent = 2;
  double reg_weight = 1e-6;
  double learning_rate = 0.01;
  std::size_t epochs = 10000;
  int level = 6;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 20190601;
  std::filesystem::path output_dir = "out";
  std::size_t workers = 0;
  ModelSection model;
  SamplingSection sampling;
  TrainingSection training;
  MultilevelSection multilevel;
  UqSection uq;
  BoundStudySection bound_study;

  ProjectileModel make_model() const;
  /// Ensemble settings with the NN grid narrowed to one (q, lambda) pair.
  EnsembleConfig ensemble_config(int reg_exponent, double reg_weight) const;
  /// Ensemble settings with the full configured grid.
  EnsembleConfig search_config() const;
};

/// Parses YAML text; `source` names the file in error messages.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Semantic checks (ranges, sequence validity, ladder reachability).
void validate(const ExperimentConfig& config);

/// Stable hex digest of the fields that determine generated data.
std::string data_fingerprint(const ExperimentConfig& config);

std::string fnv1a_hex(const std::string& text);

}  // namespace mlml::cli
