#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mlml/ensemble.hpp"
#include "mlml/metrics.hpp"
#include "mlml/multilevel.hpp"
#include "mlml/param_space.hpp"
#include "mlml_cli/config.hpp"

namespace mlml::cli {

/// Seed tags; every random stream is derive_seed(config.seed, {tag, ...}).
enum SeedTag : std::uint64_t {
  kPoolTag = 1,
  kTestTag = 2,
  kSearchTag = 3,
  kBaseTag = 4,
  kDetailTag = 5,
  kSingleTag = 6,
  kReferenceTag = 7,
  kEvaluationTag = 8,
  kMcTag = 9,
  kBoundTag = 10,
};

/// Training pool evaluated on every ladder level plus an independent test
/// set at the finest level.
struct DataStore {
  SampleSet pool{1, {}, RandomProvenance{}};
  std::vector<std::vector<double>> levels;  // levels[l][i]
  SampleSet test{1, {}, RandomProvenance{}};
  std::vector<double> test_truth;
};

PointStream pool_stream(const ExperimentConfig& config);
PointStream test_stream(const ExperimentConfig& config);

std::filesystem::path data_dir(const ExperimentConfig& config);

struct GenDataResult {
  bool skipped = false;
  std::vector<std::filesystem::path> files;
};

/// Writes data/level_<l>.csv (l = 0..L), data/test.csv and data/manifest.json.
/// Skips all work when the manifest matches the configuration and files.
GenDataResult cmd_gen_data(const ExperimentConfig& config, std::ostream& log);

/// Loads the data written by gen-data, refusing stale or corrupted sets.
DataStore load_data(const ExperimentConfig& config);

/// Generates the data in memory without touching the disk.
DataStore generate_data(const ExperimentConfig& config);

struct Hyperparameters {
  int base_reg_exponent = 2;
  double base_reg_weight = 5e-7;
  int detail_reg_exponent = 2;
  double detail_reg_weight = 5e-7;
  bool per_surrogate_search = false;
};

/// Fixed values, or a grid search on the base map and D_ref = L^1 - L^0
/// (cached in <output>/search.json).
Hyperparameters resolve_hyperparameters(const ExperimentConfig& config, const DataStore& data, std::ostream& log);

EnsembleConfig base_ensemble_config(const ExperimentConfig& config, const Hyperparameters& h);
EnsembleConfig detail_ensemble_config(const ExperimentConfig& config, const Hyperparameters& h);

/// Single-level surrogate of the finest map on pool points [0, n).
SurrogateEnsemble train_single_level(const ExperimentConfig& config, const DataStore& data, const Hyperparameters& h,
                                     std::size_t samples);

/// Multilevel surrogate with the pool split into consecutive blocks.
MultilevelSurrogate train_multilevel_from_pool(const ExperimentConfig& config, const DataStore& data,
                                               const Hyperparameters& h, const std::vector<int>& sequence,
                                               std::size_t coarse, std::size_t fine);

void cmd_train_sl(const ExperimentConfig& config, std::size_t samples, std::ostream& log);
void cmd_train_ml(const ExperimentConfig& config, const std::vector<int>& sequence, std::size_t coarse,
                  std::size_t fine, std::ostream& log);

struct SweepRow {
  std::string sequence;
  double complexity = 0.0;
  std::size_t coarse = 0;
  std::size_t fine = 0;
  double ml_cost = 0.0;
  std::size_t sl_samples = 0;
  double sl_cost = 0.0;
  double ml_error = 0.0;
  double sl_error = 0.0;
  double gain = 0.0;
};

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const DataStore& data, const Hyperparameters& h,
                                std::ostream& log);
std::string sweep_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> cmd_sweep(const ExperimentConfig& config, std::ostream& log);

struct UqRow {
  std::string method;  // mc, sl2mc, ml2mc
  std::string config_id;
  double cost = 0.0;
  double w1 = 0.0;          // mean over repetitions for mc
  double mean_error = 0.0;  // |mean - reference mean| / |reference mean|
  double std_error = 0.0;   // |std - reference std| / reference std
  std::size_t repetitions = 1;
};

std::vector<UqRow> run_uq(const ExperimentConfig& config, const DataStore& data, const Hyperparameters& h,
                          std::ostream& log);
std::string uq_csv(const std::vector<UqRow>& rows);
std::vector<UqRow> cmd_uq(const ExperimentConfig& config, std::ostream& log);

ErrorStudyConfig bound_study_config(const ExperimentConfig& config);
std::vector<ErrorStudyRow> cmd_bound_study(const ExperimentConfig& config, std::ostream& log);

/// "0,3,6" -> {0, 3, 6}; throws ConfigError on malformed input.
std::vector<int> parse_sequence(const std::string& text);

}  // namespace mlml::cli
