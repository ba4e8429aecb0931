// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace stochctl {

/// SplitMix64 finalizer (Steele, Lea & Flood). Full 64-bit avalanche.
constexpr std::uint64_t fmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Combines two 64-bit words into one seed: fmix64(a ^ fmix64(b)).
constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b) noexcept {
  return fmix64(a ^ fmix64(b));
}

/// Deterministic random source identified by (master_seed, stream_index).
///
/// The engine is std::mt19937_64 seeded with mix(master_seed, stream_index);
/// its output sequence is fixed by the C++ standard. Uniforms take the top
/// 53 bits of one draw. Gaussians use the Box-Muller transform on two
/// uniforms and return the cosine branch first, then the cached sine branch.
/// Substreams for parallel work are derived with child(j), which never
/// consumes draws from the parent.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t master_seed, std::uint64_t stream_index = 0)
      : master_seed_(master_seed),
        stream_index_(stream_index),
        engine_(mix(master_seed, stream_index)) {}

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_index() const noexcept { return stream_index_; }

  RandomStream child(std::uint64_t j) const {
    return RandomStream(master_seed_, mix(stream_index_, j));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal variate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace stochctl
