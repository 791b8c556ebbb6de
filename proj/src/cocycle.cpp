#include "phlab/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace phlab {
namespace {

using Frame2 = Eigen::Matrix<double, 3, 2>;

Vec3 generic_vector() { return Vec3(0.3141592653589793, 0.7071067811865476, 0.5772156649015329).normalized(); }

Frame2 orthonormalize(const Frame2& m) {
  Eigen::HouseholderQR<Frame2> qr(m);
  Frame2 q = qr.householderQ() * Frame2::Identity();
  const auto r = qr.matrixQR();
  for (int j = 0; j < 2; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

double angle_between_lines(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), std::abs(a.dot(b)));
}

struct Transported {
  Vec3 line;
  Vec3 normal;  // of the transported plane
};

// Pushes a line and a plane through a sequence of linear maps.
Transported transport(const std::vector<std::function<Vec3(const Vec3&)>>& ops) {
  Vec3 line = generic_vector();
  Frame2 plane = generic_two_frame();
  for (const auto& op : ops) {
    line = op(line).normalized();
    Frame2 next;
    next.col(0) = op(plane.col(0));
    next.col(1) = op(plane.col(1));
    plane = orthonormalize(next);
  }
  return {line, plane.col(0).cross(plane.col(1)).normalized()};
}

struct RawSplitting {
  Vec3 e_s, e_c, e_u;
};

RawSplitting raw_splitting(const MapSpec& map, const TorusPoint& x, std::size_t warmup) {
  // Backward orbit x_{-W}, ..., x_{-1}; forward transport along it reaches x.
  std::vector<TorusPoint> back(warmup);
  TorusPoint y = x;
  for (std::size_t i = 0; i < warmup; ++i) {
    y = map.inverse_apply(y);
    back[warmup - 1 - i] = y;
  }
  std::vector<std::function<Vec3(const Vec3&)>> fwd_ops;
  fwd_ops.reserve(warmup);
  std::vector<Mat3> fwd_mats(warmup);
  for (std::size_t i = 0; i < warmup; ++i) fwd_mats[i] = map.derivative(back[i]);
  for (std::size_t i = 0; i < warmup; ++i) {
    fwd_ops.emplace_back([&fwd_mats, i](const Vec3& v) { return Vec3(fwd_mats[i] * v); });
  }
  const Transported unstable = transport(fwd_ops);

  // Forward orbit x, ..., x_{W-1}; solving backwards from x_W reaches x.
  std::vector<Eigen::PartialPivLU<Mat3>> lus;
  lus.reserve(warmup);
  y = x;
  for (std::size_t i = 0; i < warmup; ++i) {
    lus.emplace_back(map.derivative(y));
    y = map.apply(y);
  }
  std::vector<std::function<Vec3(const Vec3&)>> back_ops;
  back_ops.reserve(warmup);
  for (std::size_t i = warmup; i-- > 0;) {
    back_ops.emplace_back([&lus, i](const Vec3& v) { return Vec3(lus[i].solve(v)); });
  }
  const Transported stable = transport(back_ops);

  RawSplitting out;
  out.e_u = unstable.line;
  out.e_s = stable.line;
  out.e_c = unstable.normal.cross(stable.normal).normalized();
  return out;
}

}  // namespace

Eigen::Matrix<double, 3, 2> generic_two_frame() {
  Frame2 m;
  m.col(0) = generic_vector();
  m.col(1) = Vec3(-0.6180339887498949, 0.2718281828459045, 0.7390851332151607);
  return orthonormalize(m);
}

SplittingFrame estimate_splitting(const MapSpec& map, const TorusPoint& x, std::size_t warmup,
                                  double min_angle) {
  if (warmup < 50) throw ValidationError("estimate_splitting needs warmup >= 50");
  const RawSplitting here = raw_splitting(map, x, warmup);
  const TorusPoint fx = map.apply(x);
  const RawSplitting there = raw_splitting(map, fx, warmup);
  const Mat3 df = map.derivative(x);

  SplittingFrame frame;
  frame.point = x;
  frame.e_s = here.e_s;
  frame.e_c = here.e_c;
  frame.e_u = here.e_u;
  frame.residual = std::max({angle_between_lines(df * here.e_s, there.e_s),
                             angle_between_lines(df * here.e_c, there.e_c),
                             angle_between_lines(df * here.e_u, there.e_u)});
  frame.min_angle = std::min({angle_between_lines(frame.e_s, frame.e_c),
                              angle_between_lines(frame.e_s, frame.e_u),
                              angle_between_lines(frame.e_c, frame.e_u)});
  if (frame.min_angle < min_angle) {
    throw ValidationError("estimate_splitting: bundles nearly tangent at " + to_string(x));
  }
  return frame;
}

// ---------------------------------------------------------------------------

FtleAccumulator::FtleAccumulator(const MapSpec& map, const TorusPoint& x, TimeDirection direction)
    : map_(map), x_(x), direction_(direction) {}

std::array<double, 3> FtleAccumulator::step() {
  Mat3 jac;
  if (direction_ == TimeDirection::Forward) {
    jac = map_.derivative(x_);
    x_ = map_.apply(x_);
  } else {
    x_ = map_.inverse_apply(x_);
    jac = map_.derivative(x_).inverse();
  }
  Eigen::HouseholderQR<Mat3> qr(jac * q_);
  Mat3 q = qr.householderQ();
  const Mat3& r = qr.matrixQR();
  std::array<double, 3> logs{};
  for (int j = 0; j < 3; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
    logs[j] = std::log(std::abs(r(j, j)));
  }
  q_ = q;
  return logs;
}

void FtleAccumulator::warmup(std::size_t steps) {
  for (std::size_t i = 0; i < steps; ++i) step();
  warmed_ += steps;
}

FtleReport FtleAccumulator::advance(std::size_t steps) {
  std::array<double, 3> sums{};
  for (std::size_t i = 0; i < steps; ++i) {
    const auto logs = step();
    for (int j = 0; j < 3; ++j) sums[j] += logs[j];
  }
  FtleReport rep;
  rep.orbit_length = steps;
  rep.warmup = warmed_;
  for (int j = 0; j < 3; ++j) rep.exponents[j] = steps ? sums[j] / static_cast<double>(steps) : 0.0;
  std::sort(rep.exponents.begin(), rep.exponents.end(), std::greater<>());
  return rep;
}

FtleReport ftle(const MapSpec& map, const TorusPoint& x, std::size_t n, std::size_t warmup,
                TimeDirection direction) {
  if (n < 1000) throw ValidationError("ftle needs n >= 1000");
  FtleAccumulator acc(map, x, direction);
  acc.warmup(warmup);
  return acc.advance(n);
}

// ---------------------------------------------------------------------------

double smallest_singular_value(const Eigen::Matrix2d& r) {
  const double a = r(0, 0), b = r(0, 1), c = r(1, 0), d = r(1, 1);
  const double det = std::abs(a * d - b * c);
  const double fro2 = a * a + b * b + c * c + d * d;
  const double disc = std::sqrt(std::max(0.0, fro2 * fro2 - 4.0 * det * det));
  const double smax = std::sqrt(0.5 * (fro2 + disc));
  return smax > 0.0 ? det / smax : 0.0;
}

CuTransport::CuTransport(const MapSpec& map, const TorusPoint& x, std::size_t warmup)
    : map_(map), x_(x), frame_(generic_two_frame()) {
  std::vector<TorusPoint> back(warmup);
  TorusPoint y = x;
  for (std::size_t i = 0; i < warmup; ++i) {
    y = map.inverse_apply(y);
    back[warmup - 1 - i] = y;
  }
  for (const TorusPoint& z : back) advance_frame(map.derivative_eigen(z));
}

Eigen::Matrix2d CuTransport::advance_frame(const Mat3& m) {
  // Gram-Schmidt keeps the diagonal of R positive.
  const Vec3 w1 = m * frame_.col(0);
  Vec3 w2 = m * frame_.col(1);
  Eigen::Matrix2d r = Eigen::Matrix2d::Zero();
  r(0, 0) = w1.norm();
  const Vec3 q1 = w1 / r(0, 0);
  r(0, 1) = q1.dot(w2);
  w2 -= r(0, 1) * q1;
  r(1, 1) = w2.norm();
  frame_.col(0) = q1;
  frame_.col(1) = w2 / r(1, 1);
  return r;
}

double CuTransport::step() {
  const Eigen::Matrix2d r = advance_frame(map_.derivative_eigen(x_));
  const double smin = smallest_singular_value(r);
  if (!(smin > 1e-14)) {
    throw Error("cu restriction is singular at " + to_string(x_));
  }
  x_ = map_.apply(x_);
  return -std::log(smin);
}

ContractionSeries contraction_series(const MapSpec& map, const TorusPoint& x, std::size_t length,
                                     std::size_t warmup) {
  if (length < 1) throw ValidationError("contraction_series needs L >= 1");
  CuTransport cu(map, x, warmup);
  ContractionSeries out;
  out.base_point = x;
  out.values.reserve(length);
  for (std::size_t n = 0; n < length; ++n) out.values.push_back(cu.step());
  return out;
}

}  // namespace phlab
