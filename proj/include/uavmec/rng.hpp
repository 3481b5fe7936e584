#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace uavmec {

// Deterministic random source. All simulation randomness flows through one of
// these per environment/learner instance; the draw order is part of each
// consumer's documented contract so runs replay bit-for-bit.
//
// uniform() maps raw 64-bit output to [0,1) itself and normal() is a fixed
// two-uniform Box-Muller, so results do not depend on the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal; consumes exactly two uniforms (no pair caching).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0,1], keeps log() finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // Modulo bias is < 2^-53 for any n that fits a replay buffer; acceptable.
    return n == 0 ? 0 : next_u64() % n;
  }

  // Derives an independent stream id from (a, b); splitmix64 finalizer.
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace uavmec
