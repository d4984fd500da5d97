#pragma once

#include <cstdint>

namespace mpcqp {

/// xorshift64* generator (shifts 12/25/27, multiplier 2685821657736338717).
/// Small and explicitly specified so disturbance sequences and random test
/// instances reproduce bit-for-bit across implementations. A zero seed is
/// remapped to 0x9E3779B97F4A7C15 because the all-zero state is a fixed point.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9E3779B97F4A7C15ULL) {}

  std::uint64_t next_u64() {
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 2685821657736338717ULL;
  }

  /// Uniform in [0, 1): top 53 bits of the output word.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  std::uint64_t state_;
};

}  // namespace mpcqp
