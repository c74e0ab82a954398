#pragma once

#include <cstdio>
#include <string>

namespace fairshape::csv {

// Fixed formatting so identical runs produce identical bytes.
inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

inline std::string invocation_comment(int argc, const char* const* argv) {
  std::string line = "# command:";
  for (int i = 0; i < argc; ++i) {
    line += ' ';
    line += argv[i];
  }
  return line;
}

}  // namespace fairshape::csv
