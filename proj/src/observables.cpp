#include "phlab/observables.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace phlab {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view s) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) {
    throw ValidationError("observable: bad number '" + std::string(s) + "'");
  }
  return v;
}

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

Observable Observable::character(std::array<int, 3> m, ObservableKind kind) {
  if (kind == ObservableKind::Bump) throw ValidationError("character needs cos or sin");
  for (int c : m) {
    if (std::abs(c) > 3) throw ValidationError("character frequency must satisfy |m|_inf <= 3");
  }
  Observable o;
  o.kind = kind;
  o.m = m;
  return o;
}

Observable Observable::bump(const TorusPoint& center, double radius, double exponent) {
  if (!(radius > 0.0 && radius <= 0.5)) throw ValidationError("bump radius must lie in (0, 0.5]");
  if (!(exponent > 0.0 && exponent <= 1.0)) {
    throw ValidationError("bump exponent must lie in (0, 1]");
  }
  Observable o;
  o.kind = ObservableKind::Bump;
  o.center = center;
  o.radius = radius;
  o.exponent = exponent;
  return o;
}

double Observable::operator()(const TorusPoint& x) const {
  if (kind == ObservableKind::Bump) {
    const double t = 1.0 - torus_distance(x, center) / radius;
    if (t <= 0.0) return 0.0;
    if (exponent == 1.0) return t;
    if (exponent == 0.5) return std::sqrt(t);
    return std::pow(t, exponent);
  }
  const double phase = kTwoPi * (m[0] * x[0] + m[1] * x[1] + m[2] * x[2]);
  return kind == ObservableKind::Cos ? std::cos(phase) : std::sin(phase);
}

std::string Observable::name() const {
  std::ostringstream os;
  if (kind == ObservableKind::Bump) {
    os << "bump:" << fmt(center[0]) << ',' << fmt(center[1]) << ',' << fmt(center[2]) << ':'
       << fmt(radius) << ':' << fmt(exponent);
  } else {
    os << (kind == ObservableKind::Cos ? "cos:" : "sin:") << m[0] << ',' << m[1] << ',' << m[2];
  }
  return os.str();
}

Observable parse_observable(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts.empty()) throw ValidationError("observable: empty");
  if (parts[0] == "cos" || parts[0] == "sin") {
    if (parts.size() != 2) throw ValidationError("observable: expected cos:m1,m2,m3");
    const auto ms = split(parts[1], ',');
    if (ms.size() != 3) throw ValidationError("observable: frequency needs 3 entries");
    std::array<int, 3> m{};
    for (int i = 0; i < 3; ++i) m[i] = parse_number<int>(ms[i]);
    return Observable::character(m, parts[0] == "cos" ? ObservableKind::Cos : ObservableKind::Sin);
  }
  if (parts[0] == "bump") {
    if (parts.size() != 4) throw ValidationError("observable: expected bump:x,y,z:radius:exponent");
    const auto cs = split(parts[1], ',');
    if (cs.size() != 3) throw ValidationError("observable: bump centre needs 3 entries");
    const TorusPoint c(parse_number<double>(cs[0]), parse_number<double>(cs[1]),
                       parse_number<double>(cs[2]));
    return Observable::bump(c, parse_number<double>(parts[2]), parse_number<double>(parts[3]));
  }
  throw ValidationError("observable: unknown kind '" + std::string(parts[0]) + "'");
}

const std::vector<std::array<int, 3>>& dictionary_frequencies() {
  static const std::vector<std::array<int, 3>> freqs = [] {
    std::vector<std::array<int, 3>> out;
    for (int a = -2; a <= 2; ++a) {
      for (int b = -2; b <= 2; ++b) {
        for (int c = -2; c <= 2; ++c) {
          const std::array<int, 3> m{a, b, c};
          const int lead = a != 0 ? a : (b != 0 ? b : c);
          if (lead > 0) out.push_back(m);
        }
      }
    }
    return out;
  }();
  return freqs;
}

std::vector<Observable> dictionary() {
  std::vector<Observable> out;
  for (const auto& m : dictionary_frequencies()) {
    out.push_back(Observable::character(m, ObservableKind::Cos));
    out.push_back(Observable::character(m, ObservableKind::Sin));
  }
  return out;
}

void evaluate_dictionary(const TorusPoint& x, DictionaryValues& out) {
  // re/im[j][k + 2] = e^{2 pi i k x_j}; products written out by hand because
  // std::complex multiplication checks for infinities.
  double re[3][5], im[3][5];
  for (int j = 0; j < 3; ++j) {
    const double c = std::cos(kTwoPi * x[j]);
    const double s = std::sin(kTwoPi * x[j]);
    re[j][2] = 1.0;
    im[j][2] = 0.0;
    re[j][3] = c;
    im[j][3] = s;
    re[j][4] = c * c - s * s;
    im[j][4] = 2.0 * c * s;
    re[j][1] = c;
    im[j][1] = -s;
    re[j][0] = re[j][4];
    im[j][0] = -im[j][4];
  }
  const auto& freqs = dictionary_frequencies();
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const int a = freqs[i][0] + 2, b = freqs[i][1] + 2, c = freqs[i][2] + 2;
    const double r1 = re[0][a] * re[1][b] - im[0][a] * im[1][b];
    const double i1 = re[0][a] * im[1][b] + im[0][a] * re[1][b];
    out[2 * i] = r1 * re[2][c] - i1 * im[2][c];
    out[2 * i + 1] = r1 * im[2][c] + i1 * re[2][c];
  }
}

std::size_t histogram_cell(const TorusPoint& x) {
  std::size_t idx = 0;
  for (int j = 0; j < 3; ++j) {
    const int c = std::min(kHistogramBins - 1, static_cast<int>(x[j] * kHistogramBins));
    idx = idx * kHistogramBins + static_cast<std::size_t>(c);
  }
  return idx;
}

}  // namespace phlab
