#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlml/level_model.hpp"
#include "mlml/param_space.hpp"

namespace mlml {

enum class MeasureSource { kMc, kQmc, kSl2mc, kMl2mc, kReference, kMixed };

std::string to_string(MeasureSource source);
MeasureSource measure_source_from_string(const std::string& s);

/// Uniformly weighted atoms; `cost` counts forward-model work only.
struct EmpiricalMeasure {
  std::vector<double> atoms;
  MeasureSource source = MeasureSource::kMc;
  double cost = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return atoms.size(); }
  double weight() const { return 1.0 / static_cast<double>(atoms.size()); }
};

class TooFewAtomsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// J model evaluations at `level` on points [0, J) of `points`; cost J * cost(level).
/// The source is mc for random points and qmc for Sobol points.
EmpiricalMeasure push_forward_direct(const LevelModel& model, int level, const PointStream& points, std::size_t count,
                                     std::size_t workers = 0);

/// Same at an arbitrary step size (used for the reference measure).
EmpiricalMeasure push_forward_at_step(const LevelModel& model, double step, const PointStream& points,
                                      std::size_t count, std::size_t workers = 0);

/// Maps row-major inputs (N x d) to N predictions.
using BatchPredictor = std::function<std::vector<double>(std::span<const double>)>;

/// J surrogate evaluations; the cost is the surrogate's training-data cost.
EmpiricalMeasure push_forward_surrogate(const BatchPredictor& surrogate, const PointStream& points, std::size_t count,
                                        double training_cost, MeasureSource source);

struct MeasureStats {
  double mean = 0.0;
  double std = 0.0;
};

/// Sample mean and 1/(J-1) standard deviation; throws TooFewAtomsError below two atoms.
MeasureStats measure_stats(const EmpiricalMeasure& measure);

double measure_mean(const EmpiricalMeasure& measure);

/// Union of the atoms; costs add.
EmpiricalMeasure mix(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

/// `path` gets one atom per row under the header "value"; `path`.json
/// holds the source, count, seed and cost.
void write_measure(const std::filesystem::path& path, const EmpiricalMeasure& measure);
EmpiricalMeasure read_measure(const std::filesystem::path& path);

}  // namespace mlml
