#pragma once

#include "phlab/models.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace phlab {

/// Numerical E^s, E^c, E^u at a point. Vectors are Euclidean-unit.
struct SplittingFrame {
  TorusPoint point;
  Vec3 e_s, e_c, e_u;
  /// Largest angle (radians) between Df e_i and the frame estimated at f(x).
  double residual = 0.0;
  /// Smallest pairwise angle between the three directions.
  double min_angle = 0.0;
};

/// Power iteration along the backward orbit (e_u, E^cu) and the forward
/// orbit solved backwards (e_s, E^cs); e_c = E^cu ∩ E^cs.
/// Throws ValidationError if warmup < 50 or the directions are closer than
/// min_angle.
SplittingFrame estimate_splitting(const MapSpec& map, const TorusPoint& x,
                                  std::size_t warmup = 200, double min_angle = 1e-3);

enum class TimeDirection { Forward, Backward };

struct FtleReport {
  std::array<double, 3> exponents{};  // descending, nats per iterate
  std::size_t orbit_length = 0;
  std::size_t warmup = 0;

  double sum() const { return exponents[0] + exponents[1] + exponents[2]; }
  double center() const { return exponents[1]; }
};

/// Benettin QR accumulation. Segments reported by consecutive calls to
/// advance() combine exactly: the report over n + m iterates is the
/// length-weighted mean of the two segment reports.
class FtleAccumulator {
 public:
  FtleAccumulator(const MapSpec& map, const TorusPoint& x,
                  TimeDirection direction = TimeDirection::Forward);

  /// Transports the frame without accumulating.
  void warmup(std::size_t steps);
  /// Accumulates `steps` iterates and returns the report for those only.
  FtleReport advance(std::size_t steps);

  const TorusPoint& point() const { return x_; }

 private:
  std::array<double, 3> step();

  const MapSpec& map_;
  TorusPoint x_;
  TimeDirection direction_;
  Mat3 q_ = Mat3::Identity();
  std::size_t warmed_ = 0;
};

/// Requires n >= 1000.
FtleReport ftle(const MapSpec& map, const TorusPoint& x, std::size_t n, std::size_t warmup = 200,
                TimeDirection direction = TimeDirection::Forward);

/// a_n = log |Df^-1 restricted to E^cu(f^n x)| for n = 1..L, in the adapted
/// metric (eigen-coordinates orthonormal).
struct ContractionSeries {
  TorusPoint base_point;
  std::vector<double> values;

  std::size_t length() const { return values.size(); }
};

/// Streams the cu co-norm along an orbit. The E^cu plane is an orthonormal
/// 2-frame in eigen-coordinates, transported by Df and re-orthonormalized
/// each step.
class CuTransport {
 public:
  CuTransport(const MapSpec& map, const TorusPoint& x, std::size_t warmup = 200);

  /// Point f^{n-1} x whose derivative produces the next value.
  const TorusPoint& point() const { return x_; }
  /// Eigen-coordinate frame of E^cu at point().
  const Eigen::Matrix<double, 3, 2>& frame() const { return frame_; }

  /// Returns a_n and moves to f^n x. Throws Error if the restriction is
  /// numerically singular.
  double step();

 private:
  // Pushes the frame through m and returns the 2x2 R factor.
  Eigen::Matrix2d advance_frame(const Mat3& m);

  const MapSpec& map_;
  TorusPoint x_;
  Eigen::Matrix<double, 3, 2> frame_;
};

ContractionSeries contraction_series(const MapSpec& map, const TorusPoint& x, std::size_t length,
                                     std::size_t warmup = 200);

/// Smallest singular value of an upper-triangular 2x2 block.
double smallest_singular_value(const Eigen::Matrix2d& r);

/// Shared by the splitting and cu transports.
Eigen::Matrix<double, 3, 2> generic_two_frame();

}  // namespace phlab
