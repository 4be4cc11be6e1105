#pragma once

#include <charconv>
#include <string>

namespace hyperts {

/// Shortest decimal text that parses back to the same double.
inline std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace hyperts
