#pragma once

#include <charconv>
#include <string>

namespace fgflow {

/// Shortest round-trip decimal form of a double. Used everywhere a number is
/// written to a file so that re-runs are byte-identical.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

inline std::string format_fixed(double v, int precision) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace fgflow
