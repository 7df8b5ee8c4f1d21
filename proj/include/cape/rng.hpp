#pragma once

#include <cstdint>
#include <limits>

namespace cape {

/// Deterministic uniform stream used by every randomized operation in this
/// library. The generator is SplitMix64 (Vigna's fixed-increment variant of
/// Java's SplittableRandom); doubles are produced from the top 53 bits of
/// each 64-bit output, so the sequence of draws for a given seed is
/// bit-identical on every platform and in every language that follows the
/// same recipe:
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   output = z ^ (z >> 31)
///   u01 = (output >> 11) * 2^-53          -> [0, 1)
///   uniform(a, b) = a + (b - a) * u01     -> [a, b)
///
/// Each operation that consumes a stream documents its draw order; together
/// with this recipe that makes results reproducible across implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53-bit mantissa.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [low, high). uniform(x, x) == x exactly.
  double uniform(double low, double high) {
    return low + (high - low) * next_double();
  }

  /// Uniform integer in [0, n), by rejection so the result is unbiased.
  std::uint64_t next_below(std::uint64_t n) {
    // Rejection zone keeps the mapping exact for any n.
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n + 1) % n;
    std::uint64_t v = next_u64();
    while (limit != std::numeric_limits<std::uint64_t>::max() && v > limit) {
      v = next_u64();
    }
    return v % n;
  }

  /// Independent stream for batch element `index`. The sub-seed is the first
  /// SplitMix64 output of a stream seeded with (seed XOR index); this
  /// derivation is part of the frozen reproducibility contract, so callers
  /// may parallelize over batch elements without changing results.
  RngStream substream(std::uint64_t index) const {
    RngStream base(seed_ ^ index);
    return RngStream(base.next_u64());
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace cape
