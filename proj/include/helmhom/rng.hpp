// Deterministic randomness. The engine is std::mt19937_64 (bit-exact by the
// C++ standard); every distribution is implemented here because the standard
// library's distributions are implementation-defined and the pipeline needs
// bit-identical samples on every platform.
#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <string_view>

namespace helmhom {

// splitmix64 finalizer: the standard 64-bit avalanche mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Stateless splittable seed derivation: one master seed plus a stream label
// and an index yield independent, reproducible sub-seeds. Used to give every
// realization (and every named consumer of randomness) its own stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                                 std::uint64_t index) {
  std::uint64_t h = mix64(master ^ fnv1a64(stream));
  h = mix64(h ^ index);
  // Guard the (astronomically unlikely) all-zero state; mt19937_64 accepts 0
  // but a nonzero canonical value keeps the mapping injective-looking.
  return h == 0 ? 0x6A09E667F3BCC909ULL : h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Poisson count by summing unit exponentials until the mean is exceeded.
  // O(mean) draws; exact and platform-stable. Means here stay below ~1e5.
  std::uint64_t poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    std::uint64_t n = 0;
    double acc = 0.0;
    for (;;) {
      double u = uniform();
      if (u <= 0.0) u = 0x1.0p-53;  // -log(0) guard
      acc += -std::log(u);
      if (acc >= mean) return n;
      ++n;
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace helmhom
