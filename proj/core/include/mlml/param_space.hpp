#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mlml {

/// The unit hypercube [0,1]^d with the uniform measure.
class ParameterSpace {
 public:
  explicit ParameterSpace(std::size_t dimension);
  std::size_t dimension() const noexcept { return dimension_; }
  bool contains(std::span<const double> y) const;

 private:
  std::size_t dimension_;
};

/// i.i.d. uniform points from the seeded project generator, starting `offset`
/// points into the stream.
struct RandomProvenance {
  std::uint64_t seed = 0;
  std::uint64_t offset = 0;
};

/// Consecutive Sobol points after `skip` emitted points.
struct SobolProvenance {
  std::uint64_t skip = 0;
};

using Provenance = std::variant<RandomProvenance, SobolProvenance>;

std::string describe(const Provenance& provenance);

/// An immutable ordered list of points in [0,1]^d, stored row-major.
class SampleSet {
 public:
  SampleSet(std::size_t dimension, std::vector<double> values, Provenance provenance);

  std::size_t size() const noexcept { return count_; }
  std::size_t dimension() const noexcept { return dimension_; }
  bool empty() const noexcept { return count_ == 0; }

  std::span<const double> point(std::size_t i) const { return {values_.data() + i * dimension_, dimension_}; }
  std::span<const double> values() const noexcept { return values_; }
  const Provenance& provenance() const noexcept { return provenance_; }

  /// Header `y0..y{d-1}`, one row per point, 17 significant digits.
  std::string to_csv() const;

 private:
  std::size_t dimension_;
  std::size_t count_;
  std::vector<double> values_;
  Provenance provenance_;
};

SampleSet uniform_sample(const ParameterSpace& space, std::size_t n, std::uint64_t seed);

/// Highest dimension covered by the built-in Joe-Kuo direction numbers.
inline constexpr std::size_t kMaxSobolDimension = 21;

class DimensionUnsupportedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Gray-code Sobol generator (32-bit direction numbers, Joe-Kuo "D(6)" set).
/// The all-zeros point of the raw sequence is never emitted: the first point
/// produced is raw index 1.
class SobolSequence {
 public:
  explicit SobolSequence(std::size_t dimension);

  std::size_t dimension() const noexcept { return dimension_; }

  /// Positions the generator so the next emitted point is emitted index `index`.
  void seek(std::uint64_t index);

  void next(std::span<double> out);

 private:
  std::size_t dimension_;
  std::vector<std::uint32_t> directions_;  // dimension_ x 32
  std::vector<std::uint32_t> state_;
  std::uint64_t raw_index_ = 0;
};

SampleSet sobol_sample(const ParameterSpace& space, std::size_t n, std::uint64_t skip);

/// A reproducible stream of points; block(offset, n) returns points
/// [offset, offset + n) of the stream, so disjoint blocks never share points.
class PointStream {
 public:
  PointStream(ParameterSpace space, Provenance origin);

  SampleSet block(std::uint64_t offset, std::size_t count) const;
  const ParameterSpace& space() const noexcept { return space_; }
  const Provenance& origin() const noexcept { return origin_; }

 private:
  ParameterSpace space_;
  Provenance origin_;
};

class InvalidSequenceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SampleAllocation {
  std::vector<int> ladder_indices;
  std::vector<std::size_t> counts;
  double exponent = 0.0;

  std::size_t total() const;
};

/// N_k = N_L * 2^(e (L - l_k)) with e = log2(N_0 / N_L) / L for interior k,
/// rounded half-to-even and clamped to >= 1; the endpoints are exactly N_0
/// and N_L.
SampleAllocation allocate_samples(std::span<const int> ladder_indices, std::size_t coarse_count,
                                  std::size_t fine_count, int finest_level);

/// Throws InvalidSequenceError unless indices start at 0, end at
/// finest_level and are strictly increasing with at least two entries.
void validate_level_indices(std::span<const int> indices, int finest_level);

}  // namespace mlml
