#include "mlml/param_space.hpp"

#include <array>
#include <cfenv>
#include <cmath>
#include <sstream>

#include "mlml/csv.hpp"
#include "mlml/random.hpp"

namespace mlml {

ParameterSpace::ParameterSpace(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw std::invalid_argument("ParameterSpace: dimension must be >= 1");
}

bool ParameterSpace::contains(std::span<const double> y) const {
  if (y.size() != dimension_) return false;
  for (double v : y)
    if (!(v >= 0.0 && v <= 1.0)) return false;
  return true;
}

std::string describe(const Provenance& provenance) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RandomProvenance>) {
          return "random(seed=" + std::to_string(p.seed) + ",offset=" + std::to_string(p.offset) + ")";
        } else {
          return "sobol(skip=" + std::to_string(p.skip) + ")";
        }
      },
      provenance);
}

SampleSet::SampleSet(std::size_t dimension, std::vector<double> values, Provenance provenance)
    : dimension_(dimension), count_(0), values_(std::move(values)), provenance_(provenance) {
  if (dimension_ == 0) throw std::invalid_argument("SampleSet: dimension must be >= 1");
  if (values_.size() % dimension_ != 0) throw std::invalid_argument("SampleSet: ragged point data");
  count_ = values_.size() / dimension_;
}

std::string SampleSet::to_csv() const {
  std::string out;
  for (std::size_t j = 0; j < dimension_; ++j) {
    if (j) out += ',';
    out += 'y' + std::to_string(j);
  }
  out += '\n';
  for (std::size_t i = 0; i < count_; ++i) {
    for (std::size_t j = 0; j < dimension_; ++j) {
      if (j) out += ',';
      out += format_double(values_[i * dimension_ + j]);
    }
    out += '\n';
  }
  return out;
}

namespace {

SampleSet uniform_block(const ParameterSpace& space, std::uint64_t seed, std::uint64_t offset,
                        std::size_t n) {
  const std::size_t d = space.dimension();
  Rng rng(seed);
  rng.discard(offset * d);
  std::vector<double> values(n * d);
  for (double& v : values) v = rng.uniform();
  return SampleSet(d, std::move(values), RandomProvenance{seed, offset});
}

// Joe & Kuo, new-joe-kuo-6.21201: degree s, coefficient a, initial m_1..m_s
// for dimensions 2..21 (dimension 1 is the van der Corput sequence).
struct DirectionEntry {
  unsigned degree;
  unsigned coefficients;
  std::array<std::uint32_t, 7> m;
};

constexpr std::array<DirectionEntry, kMaxSobolDimension - 1> kJoeKuo{{
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
    {6, 19, {1, 1, 1, 15, 7, 5}},
    {6, 22, {1, 3, 1, 15, 13, 25}},
    {6, 25, {1, 1, 5, 5, 19, 61}},
    {7, 1, {1, 3, 7, 11, 23, 15, 103}},
    {7, 4, {1, 3, 7, 13, 13, 15, 69}},
}};

constexpr unsigned kBits = 32;

}  // namespace

SampleSet uniform_sample(const ParameterSpace& space, std::size_t n, std::uint64_t seed) {
  return uniform_block(space, seed, 0, n);
}

SobolSequence::SobolSequence(std::size_t dimension)
    : dimension_(dimension), directions_(dimension * kBits), state_(dimension, 0) {
  if (dimension == 0) throw std::invalid_argument("SobolSequence: dimension must be >= 1");
  if (dimension > kMaxSobolDimension) {
    throw DimensionUnsupportedError("Sobol dimension " + std::to_string(dimension) +
                                    " exceeds the direction-number table (max " +
                                    std::to_string(kMaxSobolDimension) + ")");
  }
  for (unsigned k = 0; k < kBits; ++k) directions_[k] = 1u << (kBits - 1 - k);
  for (std::size_t j = 1; j < dimension; ++j) {
    const DirectionEntry& e = kJoeKuo[j - 1];
    std::uint32_t* v = directions_.data() + j * kBits;
    const unsigned s = e.degree;
    for (unsigned k = 0; k < s && k < kBits; ++k) v[k] = e.m[k] << (kBits - 1 - k);
    for (unsigned k = s; k < kBits; ++k) {
      std::uint32_t value = v[k - s] ^ (v[k - s] >> s);
      for (unsigned i = 1; i < s; ++i) {
        if ((e.coefficients >> (s - 1 - i)) & 1u) value ^= v[k - i];
      }
      v[k] = value;
    }
  }
}

void SobolSequence::seek(std::uint64_t index) {
  // Emitted index i is raw index i; the raw point at index g is the XOR of the
  // direction numbers selected by the bits of gray(g).
  raw_index_ = index;
  const std::uint64_t gray = raw_index_ ^ (raw_index_ >> 1);
  for (std::size_t j = 0; j < dimension_; ++j) {
    std::uint32_t x = 0;
    for (unsigned k = 0; k < kBits; ++k)
      if ((gray >> k) & 1u) x ^= directions_[j * kBits + k];
    state_[j] = x;
  }
}

void SobolSequence::next(std::span<double> out) {
  if (out.size() != dimension_) throw std::invalid_argument("SobolSequence::next: wrong output size");
  // Step raw index c -> c+1: flip the direction number at the lowest zero bit of c.
  const std::uint64_t c = raw_index_;
  unsigned bit = 0;
  while ((c >> bit) & 1u) ++bit;
  if (bit >= kBits) throw std::out_of_range("SobolSequence: exhausted 2^32 points");
  for (std::size_t j = 0; j < dimension_; ++j) {
    state_[j] ^= directions_[j * kBits + bit];
    out[j] = static_cast<double>(state_[j]) * 0x1.0p-32;
  }
  raw_index_ = c + 1;
}

SampleSet sobol_sample(const ParameterSpace& space, std::size_t n, std::uint64_t skip) {
  SobolSequence seq(space.dimension());
  seq.seek(skip);
  std::vector<double> values(n * space.dimension());
  for (std::size_t i = 0; i < n; ++i) seq.next({values.data() + i * space.dimension(), space.dimension()});
  return SampleSet(space.dimension(), std::move(values), SobolProvenance{skip});
}

PointStream::PointStream(ParameterSpace space, Provenance origin) : space_(space), origin_(origin) {}

SampleSet PointStream::block(std::uint64_t offset, std::size_t count) const {
  if (const auto* r = std::get_if<RandomProvenance>(&origin_)) {
    return uniform_block(space_, r->seed, r->offset + offset, count);
  }
  const auto& s = std::get<SobolProvenance>(origin_);
  return sobol_sample(space_, count, s.skip + offset);
}

std::size_t SampleAllocation::total() const {
  std::size_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

void validate_level_indices(std::span<const int> indices, int finest_level) {
  if (indices.size() < 2) throw InvalidSequenceError("level sequence needs at least {0, L}");
  if (indices.front() != 0) throw InvalidSequenceError("level sequence must start at level 0");
  if (indices.back() != finest_level) {
    throw InvalidSequenceError("level sequence must end at the finest level " + std::to_string(finest_level));
  }
  for (std::size_t k = 1; k < indices.size(); ++k) {
    if (indices[k] <= indices[k - 1]) throw InvalidSequenceError("level indices must be strictly increasing");
  }
}

SampleAllocation allocate_samples(std::span<const int> ladder_indices, std::size_t coarse_count,
                                  std::size_t fine_count, int finest_level) {
  validate_level_indices(ladder_indices, finest_level);
  if (fine_count < 1 || coarse_count < fine_count) {
    throw std::invalid_argument("allocate_samples: requires N_0 >= N_L >= 1");
  }
  SampleAllocation alloc;
  alloc.ladder_indices.assign(ladder_indices.begin(), ladder_indices.end());
  alloc.exponent = std::log2(static_cast<double>(coarse_count) / static_cast<double>(fine_count)) /
                   static_cast<double>(finest_level);
  const std::size_t n = ladder_indices.size();
  alloc.counts.resize(n);
  alloc.counts.front() = coarse_count;
  alloc.counts.back() = fine_count;
  const int saved_mode = std::fegetround();
  std::fesetround(FE_TONEAREST);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double exact = static_cast<double>(fine_count) *
                         std::exp2(alloc.exponent * static_cast<double>(finest_level - ladder_indices[k]));
    alloc.counts[k] = static_cast<std::size_t>(std::max(1.0, std::nearbyint(exact)));
  }
  std::fesetround(saved_mode);
  return alloc;
}

}  // namespace mlml
