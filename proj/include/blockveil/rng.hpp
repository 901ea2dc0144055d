#pragma once

// Deterministic random generation with labeled sub-streams. A single master
// seed reproduces an entire experiment: every (purpose, index) pair derives
// its own stream, so trial workers never share generator state and the
// schedule of parallel execution cannot change any result.
//
// Both the engine (splitmix64) and the distributions are implemented here
// rather than taken from <random>, because the standard does not pin the
// draw sequences of its distributions and bit-identical output matters.

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string_view>

namespace blockveil {

namespace detail {

// splitmix64 finalizer, used as a stateless mixing step.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// Child seed for stream (label, i, j) under a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t i = 0, std::uint64_t j = 0) {
  std::uint64_t s = detail::mix64(master);
  s = detail::mix64(s ^ detail::fnv1a(label));
  s = detail::mix64(s ^ (i * 0x9e3779b97f4a7c15ULL));
  s = detail::mix64(s ^ (j * 0xd1b54a32d192ed03ULL));
  return s;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x2545f4914f6cdd1dULL) {
    // warm-up so that nearby seeds decorrelate quickly
    for (int k = 0; k < 4; ++k) next_u64();
  }

  std::uint64_t next_u64() {
    // splitmix64: full 2^64 period, passes BigCrush.
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; draws come in pairs, the spare is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Unbiased integer in [0, n) by masked rejection.
  std::uint64_t bounded(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::bounded: n must be positive");
    if (n == 1) return 0;
    const std::uint64_t mask = (std::bit_ceil(n)) - 1;
    for (;;) {
      const std::uint64_t v = next_u64() & mask;
      if (v < n) return v;
    }
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace blockveil
