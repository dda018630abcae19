#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace mlml {

/// Regression data: N inputs of dimension d (row-major) with scalar targets.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t dimension, std::vector<double> inputs, std::vector<double> targets);

  std::size_t size() const noexcept { return targets_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }
  bool empty() const noexcept { return targets_.empty(); }

  std::span<const double> input(std::size_t i) const { return {inputs_.data() + i * dimension_, dimension_}; }
  std::span<const double> inputs() const noexcept { return inputs_; }
  std::span<const double> targets() const noexcept { return targets_; }
  double target(std::size_t i) const { return targets_[i]; }

  Dataset subset(std::span<const std::size_t> indices) const;
  Dataset head(std::size_t n) const;

  /// Shuffles with `seed` and moves the last round(fraction * N) points
  /// (at least one when fraction > 0 and N >= 2) into the second set.
  std::pair<Dataset, Dataset> split_validation(double fraction, std::uint64_t seed) const;

 private:
  std::size_t dimension_ = 0;
  std::vector<double> inputs_;
  std::vector<double> targets_;
};

}  // namespace mlml
