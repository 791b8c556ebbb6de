#pragma once

#include "phlab/torus.hpp"

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace phlab {

/// Spectrum of a hyperbolic toral automorphism with 0 < k1 < 1 < k2 < k3.
struct EigenData {
  std::array<double, 3> k{};  // ascending
  std::array<Vec3, 3> v{};    // unit eigenvectors, largest-modulus entry positive
};

/// Rejects matrices whose roots are complex, repeated, non-positive, on the
/// unit circle, or not ordered as one contracting and two expanding.
EigenData eigen_data(const IntMat3& matrix);

std::int64_t integer_det(const IntMat3& m);
IntMat3 integer_inverse(const IntMat3& m);  // requires |det| = 1

/// Companion matrix of t^3 - 5t^2 + 6t - 1.
IntMat3 default_matrix();

struct AnosovSpec {
  IntMat3 matrix;
  EigenData eigen;
};

AnosovSpec make_anosov(const IntMat3& matrix);

/// Derived-from-Anosov perturbation f0 = A o h supported on a ball around the
/// fixed point p = 0. Inside the ball h slides points along v2 by
/// -strength * beta(r / radius) * sin(2 pi b) / (2 pi), where b = <x - p, v2>
/// and beta(s) = (1 - s^2)^2.
struct ManeDASpec {
  AnosovSpec base;
  TorusPoint p;
  double radius = 0.05;
  double strength = 0.0;
};

/// strength defaults to 1 - 1/k2, which makes the center multiplier at p
/// exactly one. Throws ValidationError if the radius is negative or not
/// below half the separation of the period <= 2 points of A.
ManeDASpec make_mane(const AnosovSpec& base, double radius,
                     std::optional<double> strength = std::nullopt);

/// Every point x in [0,1)^3 with A^n x = x mod Z^3, by exact lattice
/// enumeration of (A^n - I)^{-1} Z^3 / Z^3. Sorted lexicographically.
std::vector<TorusPoint> linear_periodic_points(const IntMat3& matrix, int n);

/// Minimum torus distance between distinct points of period 1 or 2.
double low_period_separation(const IntMat3& matrix);

/// Concrete torus diffeomorphism: either the linear automorphism or its
/// Mañé perturbation. Immutable and cheap to copy.
class MapSpec {
 public:
  using Variant = std::variant<AnosovSpec, ManeDASpec>;

  MapSpec(AnosovSpec spec);  // NOLINT(google-explicit-constructor)
  MapSpec(ManeDASpec spec);  // NOLINT(google-explicit-constructor)

  const Variant& spec() const { return spec_; }
  bool is_mane() const { return std::holds_alternative<ManeDASpec>(spec_); }
  const AnosovSpec& base() const;
  const EigenData& eigen() const { return base().eigen; }
  /// Zero for the linear map.
  double bump_radius() const { return radius_; }
  double bump_strength() const { return strength_; }
  std::string describe() const;

  TorusPoint apply(const TorusPoint& x) const;
  /// A h(z) on R^3; commutes with integer translations up to A.
  Vec3 apply_lift(const Vec3& z) const;
  Mat3 derivative(const TorusPoint& x) const { return derivative_lift(x.coords()); }
  Mat3 derivative_lift(const Vec3& z) const;
  /// T Df(x) V in eigen-coordinates; exactly diag(k) outside the bump.
  Mat3 derivative_eigen(const TorusPoint& x) const;
  /// Exact integer inverse for the linear map, Newton on the lift otherwise.
  TorusPoint inverse_apply(const TorusPoint& y) const;
  /// D(f^-1)(y) = Df(f^-1 y)^-1.
  Mat3 inverse_derivative(const TorusPoint& y) const;

  const Mat3& linear() const { return a_; }
  const Mat3& linear_inverse() const { return a_inv_; }
  /// Columns v1, v2, v3.
  const Mat3& eigenbasis() const { return basis_; }
  /// Coordinates in the eigenbasis; the adapted metric is the Euclidean norm
  /// of these coordinates.
  const Mat3& to_eigen() const { return to_eigen_; }
  const Vec3& center_direction() const { return v2_; }

  bool in_bump(const TorusPoint& x) const;
  /// |Df(x) v2|; v2 is an exactly invariant line field for both variants.
  double center_derivative(const TorusPoint& x) const;

 private:
  void init();
  // Gradient row of the bump shift at z; false outside the ball.
  bool bump_row(const Vec3& z, Vec3& row) const;

  Variant spec_;
  Mat3 a_, a_inv_, basis_, to_eigen_;
  Vec3 v2_;
  Vec3 p_;
  double radius_ = 0.0;
  double strength_ = 0.0;
};

struct ManeValidation {
  bool pass = false;
  double min_center_derivative = 0.0;
  TorusPoint argmin;
  double argmin_cells_from_p = 0.0;
  double min_abs_det = 0.0;
  /// Largest |Df v2 x v2| over the grid: v2 must stay an invariant direction.
  double max_center_drift = 0.0;
  /// Farthest grid point from p whose center derivative is within 1e-6 of 1.
  double near_unit_radius = 0.0;
  double cell_size = 0.0;
  std::size_t grid_points = 0;
  std::vector<TorusPoint> violations;  // capped at 32 entries
  std::vector<std::string> failures;
};

/// Scans a grid_n^3 cell-centred grid over the cube around p, keeping the
/// points inside the bump ball, plus p itself.
ManeValidation validate_mane_spec(const ManeDASpec& spec, int grid_n = 64);

}  // namespace phlab
