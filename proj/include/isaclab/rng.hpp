#pragma once

#include <cstdint>
#include <random>

#include "isaclab/types.hpp"

namespace isaclab {

// SplitMix64 step; used to decorrelate (seed, stream) pairs before seeding
// the main generator.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Seeded random stream. Stream k of a given seed is independent of stream
// k' != k, so Monte-Carlo trials can run in parallel yet stay reproducible:
// trial i always draws from stream i regardless of thread count.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t s = seed ^ (0xA0761D6478BD642FULL * (stream + 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    gen_.seed(a ^ (b << 1));
  }

  double uniform() { return uni_(gen_); }                     // [0, 1)
  double normal() { return norm_(gen_); }                     // N(0, 1)
  std::uint64_t uniform_int(std::uint64_t n) {                // [0, n)
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(gen_);
  }

  // Circularly-symmetric complex Gaussian CN(0, var): each component has
  // variance var / 2.
  cdouble cnormal(double var) {
    const double s = std::sqrt(var / 2.0);
    return {s * norm_(gen_), s * norm_(gen_)};
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> norm_{0.0, 1.0};
  std::uniform_real_distribution<double> uni_{0.0, 1.0};
};

}  // namespace isaclab
