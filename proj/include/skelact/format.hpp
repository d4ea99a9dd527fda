#pragma once

#include <charconv>
#include <string>

namespace skelact {

// Shortest round-trip decimal form; keeps CSV output deterministic.
inline std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace skelact
