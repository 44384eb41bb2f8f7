#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>

namespace qql {

// SplitMix64 finalizer. Used to derive decorrelated stream seeds from one
// user-supplied 64-bit seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of stream `stream` under base seed `base`.
///
/// Splitting scheme: a training job j of a sweep uses derive_seed(seed, j);
/// episode e of a simulation uses derive_seed(seed, e). Streams with distinct
/// ids are independent for all practical purposes.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ splitmix64(stream ^ 0x632be59bd9b4e019ULL));
}

/// Seeded random source. Draws are produced from the raw engine output with
/// fixed arithmetic, so sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n) {
    auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return std::min(k, n - 1);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace qql
