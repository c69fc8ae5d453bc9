#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

namespace foodcast {

/// Deterministic 64-bit generator (SplitMix64, Steele et al. / Vigna).
///
/// All randomness in the project flows through this engine so that a seed
/// reproduces the same stream on any platform, independent of the standard
/// library's distribution implementations.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller. Consumes two uniforms per pair and
  /// caches the spare, so draw order is reproducible.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // (0, 1] so the log is finite.
    double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Unbiased integer in [0, n) by 128-bit multiply-shift.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  int index(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

  /// Fisher-Yates shuffle driven by this engine.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Independent child stream derived from the original seed and a tag,
  /// without consuming state from this engine.
  SplitMix64 fork(std::uint64_t tag) const {
    return SplitMix64(mix(seed_ + 0x9E3779B97F4A7C15ULL * (tag + 1)));
  }

  std::uint64_t seed() const { return seed_; }

  /// SplitMix64 finalizer as a standalone hash.
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace foodcast
