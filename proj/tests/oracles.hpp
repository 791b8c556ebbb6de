#pragma once

// Independent reference computations. None of these call into the library
// code they are used to check.

#include "phlab/torus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace oracle {

using IMat = std::array<std::array<std::int64_t, 3>, 3>;

inline IMat default_matrix() { return {{{0, 0, 1}, {1, 0, -6}, {0, 1, 5}}}; }

inline IMat from_eigen(const phlab::IntMat3& m) {
  IMat out{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out[i][j] = m(i, j);
  }
  return out;
}

inline IMat multiply(const IMat& a, const IMat& b) {
  IMat c{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
    }
  }
  return c;
}

inline std::int64_t det(const IMat& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

/// |det(A^n - I)|: the number of fixed points of A^n on T^3.
inline std::int64_t fixed_point_count(const IMat& a, int n) {
  IMat p{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  for (int i = 0; i < n; ++i) p = multiply(p, a);
  for (int i = 0; i < 3; ++i) p[i][i] -= 1;
  const std::int64_t d = det(p);
  return d < 0 ? -d : d;
}

/// Real roots of t^3 - tr t^2 + c t - det by sign changes on a fine scan
/// and bisection in long double, ascending.
inline std::vector<double> characteristic_roots(const IMat& a) {
  const long double tr = a[0][0] + a[1][1] + a[2][2];
  const long double c = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) +
                        (a[0][0] * a[2][2] - a[0][2] * a[2][0]) +
                        (a[1][1] * a[2][2] - a[1][2] * a[2][1]);
  const long double d = det(a);
  auto p = [&](long double t) { return ((t - tr) * t + c) * t - d; };
  std::vector<double> roots;
  const long double lo = -50.0L, hi = 50.0L, step = 1e-3L;
  for (long double t = lo; t < hi; t += step) {
    long double x0 = t, x1 = t + step;
    if (p(x0) == 0.0L) {
      roots.push_back(static_cast<double>(x0));
      continue;
    }
    if ((p(x0) < 0) == (p(x1) < 0)) continue;
    for (int it = 0; it < 200; ++it) {
      const long double m = 0.5L * (x0 + x1);
      if ((p(m) < 0) == (p(x0) < 0)) {
        x0 = m;
      } else {
        x1 = m;
      }
    }
    roots.push_back(static_cast<double>(0.5L * (x0 + x1)));
  }
  return roots;
}

/// n (1-based) is a b-hyperbolic time iff sum_{i=n-k+1}^{n} a_i <= -k b for
/// every 1 <= k <= n. Quadratic brute force.
inline std::vector<std::size_t> hyperbolic_times(const std::vector<double>& a, double b) {
  std::vector<std::size_t> out;
  for (std::size_t n = 1; n <= a.size(); ++n) {
    bool ok = true;
    long double s = 0.0L;
    for (std::size_t k = 1; k <= n && ok; ++k) {
      s += a[n - k];
      ok = s <= -static_cast<long double>(k) * b;
    }
    if (ok) out.push_back(n);
  }
  return out;
}

/// Smallest N with (1/n) sum_{i<=n} a_i < -b/2 for all N <= n <= L; empty
/// when it fails at n = L.
inline std::optional<std::size_t> expansion_time(const std::vector<double>& a, double b) {
  std::vector<long double> avg(a.size() + 1, 0.0L);
  long double s = 0.0L;
  for (std::size_t n = 1; n <= a.size(); ++n) {
    s += a[n - 1];
    avg[n] = s / static_cast<long double>(n);
  }
  for (std::size_t N = 1; N <= a.size(); ++N) {
    bool ok = true;
    for (std::size_t n = N; n <= a.size() && ok; ++n) ok = avg[n] < -0.5L * b;
    if (ok) return N;
  }
  return std::nullopt;
}

/// Lebesgue correlation of cos(2 pi <m, x>) with cos(2 pi <m', A^n x>) for
/// the linear map: 1/2 when (A^T)^n m' = +-m, else 0 (m, m' nonzero).
inline double cos_cos_correlation(const IMat& a, std::array<std::int64_t, 3> m,
                                  std::array<std::int64_t, 3> mp, int n) {
  for (int s = 0; s < n; ++s) {
    std::array<std::int64_t, 3> next{};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) next[i] += a[j][i] * mp[j];
    }
    mp = next;
  }
  const bool same = mp == m;
  const bool opposite = mp[0] == -m[0] && mp[1] == -m[1] && mp[2] == -m[2];
  return same || opposite ? 0.5 : 0.0;
}

}  // namespace oracle
