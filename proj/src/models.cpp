#include "phlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numbers>
#include <sstream>
#include <unordered_set>

namespace phlab {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Mat3 to_double(const IntMat3& m) { return m.cast<double>(); }

// Characteristic polynomial t^3 + c2 t^2 + c1 t + c0.
std::array<double, 3> char_poly(const IntMat3& m) {
  const double tr = static_cast<double>(m.trace());
  double minors = 0.0;
  for (int i = 0; i < 3; ++i) {
    const int a = (i + 1) % 3;
    const int b = (i + 2) % 3;
    const int lo = std::min(a, b);
    const int hi = std::max(a, b);
    minors += static_cast<double>(m(lo, lo) * m(hi, hi) - m(lo, hi) * m(hi, lo));
  }
  return {-static_cast<double>(integer_det(m)), minors, -tr};
}

double polish_root(const std::array<double, 3>& c, double t) {
  for (int it = 0; it < 8; ++it) {
    const double p = ((t + c[2]) * t + c[1]) * t + c[0];
    const double dp = (3.0 * t + 2.0 * c[2]) * t + c[1];
    if (dp == 0.0) break;
    const double step = p / dp;
    t -= step;
    if (std::abs(step) <= 1e-17 * std::abs(t)) break;
  }
  return t;
}

Vec3 null_vector(const Mat3& m) {
  // Rank-2 matrix: the best-conditioned cross product of two rows spans the kernel.
  Vec3 best = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      Vec3 c = m.row(i).transpose().cross(m.row(j).transpose());
      if (c.norm() > best.norm()) best = c;
    }
  }
  best.normalize();
  int big = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(best[i]) > std::abs(best[big])) big = i;
  }
  if (best[big] < 0) best = -best;
  return best;
}

IntMat3 int_pow(const IntMat3& a, int n) {
  IntMat3 r = IntMat3::Identity();
  for (int i = 0; i < n; ++i) r = r * a;
  return r;
}

IntMat3 adjugate(const IntMat3& m) {
  IntMat3 adj;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
      const int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      adj(i, j) = m(r0, c0) * m(r1, c1) - m(r0, c1) * m(r1, c0);
    }
  }
  return adj;
}

}  // namespace

std::int64_t integer_det(const IntMat3& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

IntMat3 integer_inverse(const IntMat3& m) {
  const std::int64_t det = integer_det(m);
  if (det != 1 && det != -1) {
    throw ValidationError("integer inverse needs |det| = 1, got det = " + std::to_string(det));
  }
  return adjugate(m) * det;
}

IntMat3 default_matrix() {
  IntMat3 a;
  a << 0, 0, 1,
       1, 0, -6,
       0, 1, 5;
  return a;
}

EigenData eigen_data(const IntMat3& matrix) {
  const std::int64_t det = integer_det(matrix);
  if (det != 1 && det != -1) {
    throw ValidationError("not a torus automorphism: |det| must be 1, got det = " +
                          std::to_string(det));
  }
  Eigen::EigenSolver<Mat3> solver(to_double(matrix), false);
  const auto ev = solver.eigenvalues();
  std::array<double, 3> k{};
  for (int i = 0; i < 3; ++i) {
    if (std::abs(ev[i].imag()) > 1e-9 * std::max(1.0, std::abs(ev[i]))) {
      throw ValidationError("not a valid Anosov base: complex eigenvalues");
    }
    k[i] = ev[i].real();
  }
  std::sort(k.begin(), k.end());
  const auto poly = char_poly(matrix);
  for (double& r : k) r = polish_root(poly, r);
  for (int i = 0; i < 2; ++i) {
    if (k[i + 1] - k[i] <= 1e-9 * std::max(1.0, std::abs(k[i + 1]))) {
      throw ValidationError("not a valid Anosov base: repeated eigenvalue " + std::to_string(k[i]));
    }
  }
  for (double r : k) {
    if (r <= 0.0) {
      throw ValidationError("not a valid Anosov base: non-positive eigenvalue " + std::to_string(r));
    }
    if (std::abs(r - 1.0) <= 1e-9) {
      throw ValidationError("not a valid Anosov base: eigenvalue on the unit circle");
    }
  }
  if (!(k[0] < 1.0 && k[1] > 1.0)) {
    throw ValidationError(
        "not a valid Anosov base: need one contracting and two expanding eigenvalues");
  }
  EigenData out;
  out.k = k;
  const Mat3 a = to_double(matrix);
  for (int i = 0; i < 3; ++i) out.v[i] = null_vector(a - k[i] * Mat3::Identity());
  return out;
}

AnosovSpec make_anosov(const IntMat3& matrix) { return AnosovSpec{matrix, eigen_data(matrix)}; }

std::vector<TorusPoint> linear_periodic_points(const IntMat3& matrix, int n) {
  if (n < 1) throw ValidationError("period must be >= 1");
  const IntMat3 b = int_pow(matrix, n) - IntMat3::Identity();
  const std::int64_t det = integer_det(b);
  if (det == 0) throw ValidationError("A^n - I is singular");
  const std::int64_t mod = det < 0 ? -det : det;
  const IntMat3 adj = adjugate(b) * (det < 0 ? -1 : 1);

  using Key = std::array<std::int64_t, 3>;
  auto reduce = [mod](std::int64_t v) { return ((v % mod) + mod) % mod; };
  auto encode = [mod](const Key& u) { return (u[0] * mod + u[1]) * mod + u[2]; };
  std::array<Key, 3> gens{};
  for (int i = 0; i < 3; ++i) {
    for (int r = 0; r < 3; ++r) gens[i][r] = reduce(adj(r, i));
  }
  // The solutions form the finite group generated by the columns of B^-1.
  std::unordered_set<std::int64_t> seen;
  std::deque<Key> queue;
  std::vector<Key> members;
  const Key zero{0, 0, 0};
  seen.insert(encode(zero));
  queue.push_back(zero);
  while (!queue.empty()) {
    const Key u = queue.front();
    queue.pop_front();
    members.push_back(u);
    for (const Key& g : gens) {
      Key w{(u[0] + g[0]) % mod, (u[1] + g[1]) % mod, (u[2] + g[2]) % mod};
      if (seen.insert(encode(w)).second) queue.push_back(w);
    }
  }
  if (static_cast<std::int64_t>(members.size()) != mod) {
    throw Error("periodic point enumeration found " + std::to_string(members.size()) +
                " points, expected |det(A^n - I)| = " + std::to_string(mod));
  }
  std::vector<TorusPoint> pts;
  pts.reserve(members.size());
  const double inv = 1.0 / static_cast<double>(mod);
  for (const Key& u : members) {
    pts.emplace_back(static_cast<double>(u[0]) * inv, static_cast<double>(u[1]) * inv,
                     static_cast<double>(u[2]) * inv);
  }
  std::sort(pts.begin(), pts.end(), lex_less);
  return pts;
}

double low_period_separation(const IntMat3& matrix) {
  // Points of period 1 are contained in those of period dividing 2.
  const auto pts = linear_periodic_points(matrix, 2);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      best = std::min(best, torus_distance(pts[i], pts[j]));
    }
  }
  return best;
}

ManeDASpec make_mane(const AnosovSpec& base, double radius, std::optional<double> strength) {
  if (!(radius >= 0.0)) throw ValidationError("bump radius must be >= 0");
  const double sep = low_period_separation(base.matrix);
  if (radius >= 0.5 * sep) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "bump radius %.6g must be below half the period<=2 separation %.6g", radius,
                  0.5 * sep);
    throw ValidationError(buf);
  }
  ManeDASpec s;
  s.base = base;
  s.p = TorusPoint(0.0, 0.0, 0.0);
  s.radius = radius;
  s.strength = strength.value_or(1.0 - 1.0 / base.eigen.k[1]);
  // det Dh(p) = 1 - strength, so h stops being a diffeomorphism at 1.
  if (!(s.strength >= 0.0 && s.strength < 1.0)) {
    throw ValidationError("bump strength must lie in [0, 1)");
  }
  return s;
}

// ---------------------------------------------------------------------------

MapSpec::MapSpec(AnosovSpec spec) : spec_(std::move(spec)) { init(); }
MapSpec::MapSpec(ManeDASpec spec) : spec_(std::move(spec)) { init(); }

const AnosovSpec& MapSpec::base() const {
  if (const auto* m = std::get_if<ManeDASpec>(&spec_)) return m->base;
  return std::get<AnosovSpec>(spec_);
}

void MapSpec::init() {
  const AnosovSpec& b = base();
  a_ = to_double(b.matrix);
  a_inv_ = to_double(integer_inverse(b.matrix));
  for (int i = 0; i < 3; ++i) basis_.col(i) = b.eigen.v[i];
  to_eigen_ = basis_.inverse();
  v2_ = b.eigen.v[1];
  p_ = Vec3::Zero();
  if (const auto* m = std::get_if<ManeDASpec>(&spec_)) {
    p_ = m->p.coords();
    radius_ = m->radius;
    strength_ = m->strength;
  }
}

std::string MapSpec::describe() const {
  std::ostringstream os;
  if (is_mane()) {
    os << "mane(radius=" << radius_ << ", strength=" << strength_ << ")";
  } else {
    os << "anosov";
  }
  return os.str();
}

bool MapSpec::in_bump(const TorusPoint& x) const {
  if (radius_ <= 0.0) return false;
  return torus_distance(x, TorusPoint(p_)) < radius_;
}

Vec3 MapSpec::apply_lift(const Vec3& z) const {
  if (radius_ <= 0.0) return a_ * z;
  Vec3 d = z - p_;
  for (int i = 0; i < 3; ++i) d[i] -= std::round(d[i]);
  const double r2 = d.squaredNorm();
  const double rho2 = radius_ * radius_;
  if (r2 >= rho2) return a_ * z;
  const double t = 1.0 - r2 / rho2;
  const double beta = t * t;
  const double b = v2_.dot(d);
  const double shift = strength_ * beta * std::sin(kTwoPi * b) / kTwoPi;
  return a_ * (z - shift * v2_);
}

TorusPoint MapSpec::apply(const TorusPoint& x) const { return TorusPoint(apply_lift(x.coords())); }

bool MapSpec::bump_row(const Vec3& z, Vec3& row) const {
  if (radius_ <= 0.0) return false;
  Vec3 d = z - p_;
  for (int i = 0; i < 3; ++i) d[i] -= std::round(d[i]);
  const double r2 = d.squaredNorm();
  const double rho2 = radius_ * radius_;
  if (r2 >= rho2) return false;
  const double t = 1.0 - r2 / rho2;
  const double beta = t * t;
  const Vec3 grad_beta = (-4.0 * t / rho2) * d;
  const double b = v2_.dot(d);
  const double s = std::sin(kTwoPi * b) / kTwoPi;
  const double c = std::cos(kTwoPi * b);
  row = s * grad_beta + (beta * c) * v2_;
  return true;
}

Mat3 MapSpec::derivative_lift(const Vec3& z) const {
  Vec3 row;
  if (!bump_row(z, row)) return a_;
  const Mat3 dh = Mat3::Identity() - strength_ * v2_ * row.transpose();
  return a_ * dh;
}

Mat3 MapSpec::derivative_eigen(const TorusPoint& x) const {
  Mat3 m = Mat3::Zero();
  const auto& k = eigen().k;
  for (int i = 0; i < 3; ++i) m(i, i) = k[i];
  Vec3 row;
  if (!bump_row(x.coords(), row)) return m;
  // T A (I - s v2 row^T) V = diag(k) - s k2 e2 (V^T row)^T
  m.row(1) -= (strength_ * k[1]) * (basis_.transpose() * row).transpose();
  return m;
}

TorusPoint MapSpec::inverse_apply(const TorusPoint& y) const {
  const Vec3 target = y.coords();
  Vec3 z = a_inv_ * target;
  if (radius_ <= 0.0) return TorusPoint(z);
  constexpr int kBudget = 60;
  for (int it = 0; it < kBudget; ++it) {
    const Vec3 residual = apply_lift(z) - target;
    if (residual.lpNorm<Eigen::Infinity>() <= 1e-14) return TorusPoint(z);
    const Vec3 step = derivative_lift(z).partialPivLu().solve(residual);
    z -= step;
    if (step.lpNorm<Eigen::Infinity>() <= 1e-16) break;
  }
  const double res = (apply_lift(z) - target).lpNorm<Eigen::Infinity>();
  if (res > 1e-12) {
    throw ConvergenceError("inverse_apply: Newton did not converge at " + to_string(y));
  }
  return TorusPoint(z);
}

Mat3 MapSpec::inverse_derivative(const TorusPoint& y) const {
  if (radius_ <= 0.0) return a_inv_;
  return derivative(inverse_apply(y)).inverse();
}

double MapSpec::center_derivative(const TorusPoint& x) const {
  return (derivative(x) * v2_).norm();
}

// ---------------------------------------------------------------------------

ManeValidation validate_mane_spec(const ManeDASpec& spec, int grid_n) {
  if (grid_n < 64) throw ValidationError("validate_mane_spec needs grid_n >= 64");
  const MapSpec map(spec);
  const Vec3 v2 = map.center_direction();
  ManeValidation rep;
  rep.cell_size = spec.radius > 0.0 ? 2.0 * spec.radius / grid_n : 0.0;
  rep.min_center_derivative = std::numeric_limits<double>::infinity();
  rep.min_abs_det = std::numeric_limits<double>::infinity();

  auto visit = [&](const Vec3& offset) {
    const TorusPoint x(spec.p.coords() + offset);
    const Mat3 df = map.derivative(x);
    const Vec3 image = df * v2;
    const double cd = image.norm();
    const double det = std::abs(df.determinant());
    rep.max_center_drift = std::max(rep.max_center_drift, image.cross(v2).norm());
    if (cd < rep.min_center_derivative) {
      rep.min_center_derivative = cd;
      rep.argmin = x;
    }
    rep.min_abs_det = std::min(rep.min_abs_det, det);
    if (cd <= 1.0 + 1e-6) rep.near_unit_radius = std::max(rep.near_unit_radius, offset.norm());
    if ((cd < 1.0 - 1e-9 || det <= 1e-9) && rep.violations.size() < 32) {
      rep.violations.push_back(x);
    }
    ++rep.grid_points;
  };

  visit(Vec3::Zero());
  if (spec.radius > 0.0) {
    const double h = rep.cell_size;
    for (int i = 0; i < grid_n; ++i) {
      for (int j = 0; j < grid_n; ++j) {
        for (int k = 0; k < grid_n; ++k) {
          const Vec3 off(-spec.radius + (i + 0.5) * h, -spec.radius + (j + 0.5) * h,
                         -spec.radius + (k + 0.5) * h);
          if (off.norm() < spec.radius) visit(off);
        }
      }
    }
  }

  const double cells = rep.cell_size > 0.0 ? rep.cell_size : 1.0;
  rep.argmin_cells_from_p = torus_distance(rep.argmin, spec.p) / cells;
  if (rep.min_center_derivative < 1.0 - 1e-9) {
    rep.failures.push_back("center derivative drops below 1: min = " +
                           std::to_string(rep.min_center_derivative));
  }
  if (rep.argmin_cells_from_p > 2.0) {
    rep.failures.push_back("minimum of the center derivative is not at p");
  }
  if (rep.near_unit_radius > 2.0 * cells) {
    rep.failures.push_back("center derivative equals 1 away from p");
  }
  if (rep.min_abs_det <= 1e-9) rep.failures.push_back("Jacobian determinant vanishes");
  if (rep.max_center_drift > 1e-9) rep.failures.push_back("v2 is not an invariant direction");
  rep.pass = rep.failures.empty();
  return rep;
}

}  // namespace phlab
