#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <system_error>

namespace mpcqp {

/// Shortest round-trip decimal representation of a double (std::to_chars),
/// so emitted CSV/JSON numbers are byte-deterministic and parse back exactly.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_u64(std::uint64_t v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace mpcqp
