#pragma once

// Small text-formatting helpers shared by the config echo and the CSV/JSON
// writers: shortest round-trip decimal rendering so re-parsing an output
// reproduces the exact binary value.

#include <charconv>
#include <cstdint>
#include <string>
#include <system_error>
#include <vector>

namespace excurlab {

// Shortest decimal string that round-trips the exact double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_uint(std::uint64_t v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string join_doubles(const std::vector<double>& vs, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) out.push_back(sep);
    out += format_double(vs[i]);
  }
  return out;
}

}  // namespace excurlab
