#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace phlab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using IntMat3 = Eigen::Matrix<std::int64_t, 3, 3>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A spec or input failed one of its stated invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An iterative solve ran out of budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Point of T^3 = R^3 / Z^3, always held in the fundamental domain [0,1)^3.
class TorusPoint {
 public:
  TorusPoint() = default;
  explicit TorusPoint(const Vec3& lift) : coords_(wrap(lift)) {}
  TorusPoint(double x, double y, double z) : TorusPoint(Vec3(x, y, z)) {}

  const Vec3& coords() const { return coords_; }
  double operator[](int i) const { return coords_[i]; }

  /// Reduces every component into [0,1).
  static Vec3 wrap(const Vec3& v);

  bool operator==(const TorusPoint&) const = default;

 private:
  Vec3 coords_ = Vec3::Zero();
};

/// Shortest lift of `to - from`; every component lies in [-1/2, 1/2].
Vec3 displacement(const TorusPoint& from, const TorusPoint& to);

/// Euclidean length of `displacement`; symmetric and bounded by sqrt(3)/2.
double torus_distance(const TorusPoint& a, const TorusPoint& b);

/// Lexicographic order on coordinates, used to make merges deterministic.
bool lex_less(const TorusPoint& a, const TorusPoint& b);

std::string to_string(const TorusPoint& x);

}  // namespace phlab
