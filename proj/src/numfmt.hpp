#pragma once

// Locale-independent number formatting for CSV output.

#include <charconv>
#include <cmath>
#include <string>

namespace fracwave::detail {

inline std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace fracwave::detail
