#pragma once

#include <cstdio>
#include <string>

namespace collapse_lab::detail {

/// Compact decimal for labels: "2", "1.1", "0.05".
inline std::string compact(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", value);
  return buf;
}

/// 17 significant digits; round-trips every double exactly.
inline std::string exact(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace collapse_lab::detail
