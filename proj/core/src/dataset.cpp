#include "mlml/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mlml/random.hpp"

namespace mlml {

Dataset::Dataset(std::size_t dimension, std::vector<double> inputs, std::vector<double> targets)
    : dimension_(dimension), inputs_(std::move(inputs)), targets_(std::move(targets)) {
  if (dimension_ == 0) throw std::invalid_argument("Dataset: dimension must be >= 1");
  if (inputs_.size() != targets_.size() * dimension_) {
    throw std::invalid_argument("Dataset: input/target count mismatch");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<double> in;
  std::vector<double> out;
  in.reserve(indices.size() * dimension_);
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    auto row = input(i);
    in.insert(in.end(), row.begin(), row.end());
    out.push_back(targets_[i]);
  }
  return Dataset(dimension_, std::move(in), std::move(out));
}

Dataset Dataset::head(std::size_t n) const {
  n = std::min(n, size());
  return Dataset(dimension_, std::vector<double>(inputs_.begin(), inputs_.begin() + static_cast<std::ptrdiff_t>(n * dimension_)),
                 std::vector<double>(targets_.begin(), targets_.begin() + static_cast<std::ptrdiff_t>(n)));
}

std::pair<Dataset, Dataset> Dataset::split_validation(double fraction, std::uint64_t seed) const {
  const std::size_t n = size();
  std::size_t held = 0;
  if (fraction > 0.0 && n >= 2) {
    held = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n))), 1, n - 1);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates with the project generator so the split is portable.
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::span<const std::size_t> all(order);
  return {subset(all.first(n - held)), subset(all.last(held))};
}

}  // namespace mlml
