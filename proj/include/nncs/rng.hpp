#pragma once

// Deterministic 64-bit random streams with explicit splitting. Every random
// quantity in the toolkit flows through SeededRng so that a run is fully
// reproducible from a single integer seed, independent of platform and of
// standard-library distribution internals.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace nncs {

namespace detail {

// SplitMix64 output mixer (Steele/Lea/Flood). Bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ull;

}  // namespace detail

// Derives the seed of child stream k from a parent seed. Injective in k for a
// fixed parent, so distinct children never share a stream.
inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t k) {
  return detail::mix64(detail::mix64(k + detail::golden_gamma) ^ seed);
}

class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }

  SeededRng child(std::uint64_t k) const { return SeededRng(child_seed(seed_, k)); }

  std::uint64_t next_u64() {
    state_ += detail::golden_gamma;
    return detail::mix64(state_);
  }

  // Uniform on [0,1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool next_bernoulli(double p) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("bernoulli p outside [0,1]");
    return next_double() < p;
  }

  // Standard normal via the Box-Muller cosine branch; consumes two uniforms.
  double next_gaussian() {
    double u1 = 1.0 - next_double();  // (0,1], keeps the log finite
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, bound), rejection-sampled so the result is exact.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("next_below: bound must be positive");
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace nncs
