#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace mfes {

/// Shortest round-trip decimal form; locale-independent, so repeated runs
/// serialize bit-identical numbers.
inline std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace mfes
