#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlml/dataset.hpp"
#include "mlml/ensemble.hpp"
#include "mlml/level_model.hpp"
#include "mlml/param_space.hpp"

namespace mlml {

/// Ladder sub-sequence 0 = l_0 < ... < l_n = L.
class LevelSequence {
 public:
  LevelSequence(int finest_level, std::vector<int> indices);

  int finest_level() const noexcept { return finest_level_; }
  const std::vector<int>& indices() const noexcept { return indices_; }
  std::size_t detail_count() const noexcept { return indices_.size() - 1; }

  /// c_ml = n^2 / L
  double complexity() const;

  std::string to_string() const;  // "0-3-6"

 private:
  int finest_level_;
  std::vector<int> indices_;
};

LevelSequence build_sequence(int finest_level, std::vector<int> indices);

class ForwardModelError : public std::runtime_error {
 public:
  ForwardModelError(const std::string& what, std::vector<double> y) : std::runtime_error(what), y_(std::move(y)) {}
  const std::vector<double>& point() const noexcept { return y_; }

 private:
  std::vector<double> y_;
};

struct LevelData {
  Dataset base;                  // (y, L^{Delta_0}(y))
  std::vector<Dataset> details;  // (y, D_k(y)), k = 1..n
  double generation_cost = 0.0;
};

/// Cost of one sample of dataset k: cost(l_0) for the base, and
/// cost(l_k) + cost(l_{k-1}) for a detail.
double sample_cost(const LevelSequence& sequence, const ResolutionLadder& ladder, std::size_t k);

/// Sum over datasets of N_k times the per-sample cost.
double generation_cost(const LevelSequence& sequence, const SampleAllocation& allocation,
                       const ResolutionLadder& ladder);

/// Base points are stream block [0, N_0); detail k takes the next N_k
/// points, so no two datasets share a parameter point.
LevelData generate_level_data(const LevelModel& model, const LevelSequence& sequence,
                              const SampleAllocation& allocation, const PointStream& points, std::size_t workers = 0);

/// Same construction from a table of precomputed level values:
/// values[l][i] = L^{Delta_l}(pool point i).
LevelData assemble_level_data(const SampleSet& pool, const std::vector<std::vector<double>>& values,
                              const LevelSequence& sequence, const SampleAllocation& allocation,
                              const ResolutionLadder& ladder);

class MultilevelSurrogate {
 public:
  MultilevelSurrogate(LevelSequence sequence, SampleAllocation allocation, SurrogateEnsemble base,
                      std::vector<SurrogateEnsemble> details, double generation_cost);

  double predict(std::span<const double> y) const;
  std::vector<double> predict_batch(std::span<const double> inputs) const;

  const LevelSequence& sequence() const noexcept { return sequence_; }
  const SampleAllocation& allocation() const noexcept { return allocation_; }
  const SurrogateEnsemble& base() const noexcept { return base_; }
  const std::vector<SurrogateEnsemble>& details() const noexcept { return details_; }
  double generation_cost() const noexcept { return generation_cost_; }

  /// manifest.json plus one ensemble directory per level surrogate.
  void save(const std::filesystem::path& dir) const;
  static MultilevelSurrogate load(const std::filesystem::path& dir);

 private:
  LevelSequence sequence_;
  SampleAllocation allocation_;
  SurrogateEnsemble base_;
  std::vector<SurrogateEnsemble> details_;
  double generation_cost_;
};

struct MultilevelTrainingConfig {
  EnsembleConfig base;
  EnsembleConfig detail;
};

/// Base surrogate seeded with derive_seed(seed, {0}), detail k with
/// derive_seed(seed, {k}).
MultilevelSurrogate train_multilevel(const LevelData& data, const LevelSequence& sequence,
                                     const SampleAllocation& allocation, const MultilevelTrainingConfig& config,
                                     std::uint64_t seed);

struct SurrogateDiagnostics {
  std::string name;
  double training_error = 0.0;
  double validation_gap = 0.0;
  double surrogate_std = 0.0;
  double map_std = 0.0;
  std::size_t samples = 0;
};

struct WellTrainedEntry {
  SurrogateDiagnostics diagnostics;
  double threshold = 0.0;  // map_std / sqrt(N)
  bool errors_below_threshold = false;
  bool std_comparable = false;  // surrogate_std / map_std in [0.5, 2]
  bool verdict = false;
};

struct WellTrainedReport {
  std::vector<WellTrainedEntry> entries;
  bool all_well_trained() const;
};

WellTrainedReport well_trained_check(std::span<const SurrogateDiagnostics> surrogates);

/// Sigma_ml with 1/Sigma_ml = (L / V) [V_0 2^{-L d} + sum_k V_k 2^{-(L - l_k) d}].
/// `variances` holds V_0 (base) then V_1..V_n (details).
double estimate_speedup(std::span<const double> variances, const LevelSequence& sequence, double cost_exponent,
                        double total_variance);

/// Largest N with N * cost(L) <= total_cost.
std::size_t matched_cost_samples(double total_cost, const ResolutionLadder& ladder);

}  // namespace mlml
