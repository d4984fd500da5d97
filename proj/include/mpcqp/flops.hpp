#pragma once

#include <cstdint>

namespace mpcqp {

/// Arithmetic cost counter. Model: one add, multiply, divide or square root
/// each count one FLOP; comparisons, copies and sign flips count zero.
/// Counters are per-instance and never global, so tallies are deterministic
/// and independent of threading.
struct FlopCount {
  std::uint64_t adds = 0;
  std::uint64_t muls = 0;
  std::uint64_t divs = 0;
  std::uint64_t sqrts = 0;

  std::uint64_t total() const { return adds + muls + divs + sqrts; }

  FlopCount& operator+=(const FlopCount& o) {
    adds += o.adds;
    muls += o.muls;
    divs += o.divs;
    sqrts += o.sqrts;
    return *this;
  }
};

inline void count_fma(FlopCount* fc, std::uint64_t n) {
  if (fc) {
    fc->adds += n;
    fc->muls += n;
  }
}

inline void count_adds(FlopCount* fc, std::uint64_t n) {
  if (fc) fc->adds += n;
}

inline void count_muls(FlopCount* fc, std::uint64_t n) {
  if (fc) fc->muls += n;
}

inline void count_divs(FlopCount* fc, std::uint64_t n) {
  if (fc) fc->divs += n;
}

}  // namespace mpcqp
