#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mlml {

/// SplitMix64 finalizer; bijective on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives an independent substream seed from a parent seed and a path of
/// integer tags. Every random quantity in the project is keyed this way so that
/// one master seed determines all experiments.
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> tags) noexcept;

/// The project's generator: std::mt19937_64 (whose output sequence is fixed by
/// the standard) with distribution code written here, since the standard
/// library's distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal (Marsaglia polar method).
  double normal();

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  void discard(unsigned long long z) { engine_.discard(z); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mlml
