#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace helprank::numkernel {

/// Counter-based generator: output k is a SplitMix64 hash of (seed, k).
///
/// The stream is fully defined here rather than through <random>
/// distributions, whose algorithms differ between standard libraries;
/// datasets and checkpoints are expected to be reproducible bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal();
  /// Index drawn with probability proportional to weights.
  std::size_t categorical(std::span<const double> weights);

  /// Independent child stream; does not advance this generator.
  Rng split(std::uint64_t child_id) const;

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::int64_t>(last - first);
    for (std::int64_t i = n - 1; i > 0; --i) {
      const auto j = uniform_int(0, i);
      std::swap(first[i], first[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace helprank::numkernel
