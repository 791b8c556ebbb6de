#include "phlab/torus.hpp"

#include <cmath>
#include <cstdio>

namespace phlab {

Vec3 TorusPoint::wrap(const Vec3& v) {
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    double w = v[i] - std::floor(v[i]);
    // v = -1e-18 gives 1.0 after the subtraction.
    if (w >= 1.0) w = 0.0;
    out[i] = w;
  }
  return out;
}

Vec3 displacement(const TorusPoint& from, const TorusPoint& to) {
  Vec3 d = to.coords() - from.coords();
  for (int i = 0; i < 3; ++i) d[i] -= std::round(d[i]);
  return d;
}

double torus_distance(const TorusPoint& a, const TorusPoint& b) {
  return displacement(a, b).norm();
}

bool lex_less(const TorusPoint& a, const TorusPoint& b) {
  for (int i = 0; i < 3; ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

std::string to_string(const TorusPoint& x) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(%.17g, %.17g, %.17g)", x[0], x[1], x[2]);
  return buf;
}

}  // namespace phlab
