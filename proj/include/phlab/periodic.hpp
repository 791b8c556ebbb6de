#pragma once

#include "phlab/models.hpp"
#include "phlab/parallel.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace phlab {

struct PeriodicOrbit {
  int period = 0;                    // minimal period
  std::vector<TorusPoint> points;    // x0, f x0, ..., f^{period-1} x0
  std::array<double, 3> multipliers{};  // ascending modulus
  int stable_index = 0;
  bool hyperbolic = false;
  double residual = 0.0;             // d(f^period x0, x0)

  const TorusPoint& base() const { return points.front(); }
};

struct Classification {
  std::array<double, 3> multipliers{};
  int stable_index = 0;
  bool hyperbolic = false;
  double det = 0.0;  // det of the period derivative
};

/// Multipliers of D f^period along the orbit. Real eigenvalues keep their
/// sign; a complex pair is reported by modulus.
Classification classify(const MapSpec& map, const std::vector<TorusPoint>& orbit);

/// Orbit of x of length `period`, classified. Throws ValidationError if the
/// closing residual exceeds 1e-10.
PeriodicOrbit make_orbit(const MapSpec& map, const TorusPoint& x, int period);

struct PeriodicSearchStats {
  std::size_t seeds = 0;
  std::size_t dropped = 0;  // Newton failures
  std::size_t merged = 0;   // duplicates removed
};

/// Every point of period dividing n (1 <= n <= 6), one entry per point,
/// sorted lexicographically by base point. The linear map is enumerated
/// exactly; the perturbed map refines the linear solutions by Newton and
/// adds a 32^3 seed grid inside the bump ball.
std::vector<PeriodicOrbit> find_periodic(const MapSpec& map, int n, const Exec& exec = {},
                                         PeriodicSearchStats* stats = nullptr);

struct NewtonResult {
  bool converged = false;
  TorusPoint point;
  int iterations = 0;
  double residual = 0.0;
};

/// Newton on the lift of f^n - id. The integer translation is re-chosen each
/// step as the rounding of F^n(z) - z. A seed that already closes to 1e-14
/// is returned untouched; otherwise convergence also requires D f^n - I to
/// stay well conditioned, so degenerate roots are only found exactly.
NewtonResult newton_periodic(const MapSpec& map, const TorusPoint& seed, int n,
                             int max_iterations = 100);

struct QuasiHyperbolicSegment {
  TorusPoint start;
  std::size_t length = 0;
  double lambda = 0.0;
  double endpoint_gap = 0.0;
  std::size_t start_time = 0;  // n_i along the scanned orbit
};

struct RecurrenceOptions {
  std::size_t max_length = 8;     // longest segment considered
  std::size_t max_segments = 64;  // scan stops once this many are collected
  std::size_t warmup = 200;
};

/// Scans x, f x, ..., f^L x for pairs of lambda-hyperbolic times n_i < n_j
/// with n_j - n_i <= max_length and d(f^{n_i} x, f^{n_j} x) <= rho.
std::vector<QuasiHyperbolicSegment> quasi_hyperbolic_recurrence(
    const MapSpec& map, const TorusPoint& x, double lambda, double rho, std::size_t length,
    const RecurrenceOptions& options = {});

struct ShadowResult {
  bool success = false;
  std::optional<PeriodicOrbit> orbit;
  int newton_iterations = 0;
  /// max_i d(f^i start, f^i p) over the segment, adapted metric.
  double shadow_distance = 0.0;
  /// shadow_distance / endpoint_gap (adapted metric); 0 when the gap is 0.
  double shadow_constant = 0.0;
  std::string failure;
};

ShadowResult shadow_to_periodic(const MapSpec& map, const QuasiHyperbolicSegment& segment);

/// 1/(1 - k1) + 1/(k2 - 1): shadowing constant of the linear map.
double linear_shadowing_constant(const EigenData& eigen);

struct SkeletonCandidate {
  std::vector<PeriodicOrbit> saddles;  // one representative per group
  std::vector<std::vector<bool>> pairwise_related;  // over the whole pool
  std::vector<int> group;              // group id of each pool entry
  std::int64_t P = 0;                  // product of representative periods
  std::vector<std::string> flags;
};

/// Groups the pool by fingerprint distance (sup metric) <= eps, connected
/// components of the relation. The representative of a group has the
/// smallest period, ties broken lexicographically.
SkeletonCandidate group_saddles(const std::vector<PeriodicOrbit>& pool,
                                const std::vector<std::vector<double>>& fingerprints, double eps);

struct SkeletonOptions {
  double eps = 0.05;
  double disk_radius = 0.01;
  std::size_t disk_points = 4;
  std::size_t n_transient = 1000;
  std::size_t n_avg = 100000;
  std::uint64_t rng_seed = 1;
};

/// Fingerprint of each hyperbolic i_s = 1 saddle in the pool, averaged over
/// random points of its unstable disk, then group_saddles. Other entries of
/// the pool are ignored with a flag.
SkeletonCandidate skeleton_candidates(const MapSpec& map, const std::vector<PeriodicOrbit>& pool,
                                      const SkeletonOptions& options = {}, const Exec& exec = {});

struct UnstableDisk {
  std::vector<TorusPoint> points;
  Vec3 center = Vec3::Zero();
  Vec3 u1 = Vec3::Zero(), u2 = Vec3::Zero();  // orthonormal basis of the seed plane
  double radius = 0.0;
  /// Largest Euclidean distance from a point to the affine plane.
  double plane_residual = 0.0;
  std::size_t trimmed = 0;
};

/// m points of the local unstable manifold of the saddle's base point within
/// distance r, sampled uniformly in the expanding plane, pulled back to a
/// tiny seed disk and pushed forward again. Throws ValidationError for a
/// non-saddle or r > 0.05, Error when every point escapes the r-ball.
UnstableDisk unstable_disk(const MapSpec& map, const PeriodicOrbit& saddle, double r,
                           std::size_t m, std::uint64_t rng_seed = 1);

}  // namespace phlab
