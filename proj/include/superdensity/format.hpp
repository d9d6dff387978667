#pragma once

#include <cstdio>
#include <string>

#include "superdensity/geometry.hpp"

namespace superdensity {

/// Round-trip decimal text for CSV output (locale independent).
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Coordinates joined by ';' so a point fits in one CSV field.
inline std::string fmt(const Point& p) {
  std::string s;
  for (int i = 0; i < p.dim(); ++i) {
    if (i) s += ';';
    s += fmt(p[i]);
  }
  return s;
}

}  // namespace superdensity
