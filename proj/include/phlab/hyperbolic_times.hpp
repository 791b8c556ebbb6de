#pragma once

#include "phlab/cocycle.hpp"
#include "phlab/parallel.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace phlab {

/// Times are 1-based: n refers to the partial series a_1..a_n.
struct HyperbolicTimeReport {
  double b = 0.0;
  std::vector<std::size_t> times;
  double density = 0.0;
  std::optional<std::size_t> first_time;
  std::size_t length = 0;
};

/// n is a b-hyperbolic time iff every window average of a ending at n is
/// <= -b. With S_n = sum_{j<=n} (a_j + b) that is S_n <= min_{j<n} S_j, so a
/// single pass with a running minimum suffices.
HyperbolicTimeReport detect_hyperbolic_times(std::span<const double> series, double b);

/// Streaming form of the same test.
class HyperbolicTimeScanner {
 public:
  explicit HyperbolicTimeScanner(double b) : b_(b) {}
  /// Feeds a_n; returns whether n is a b-hyperbolic time.
  bool push(double a);
  std::size_t count() const { return n_; }

 private:
  double b_;
  long double prefix_ = 0.0L;
  long double running_min_ = 0.0L;
  std::size_t n_ = 0;
};

/// Density of b-hyperbolic times in [1, L]; requires L >= 1000.
double pliss_density(std::span<const double> series, double b);

struct ExpansionTimeRecord {
  double b = 0.0;
  /// Empty when censored: the tail condition still fails at orbit_length.
  std::optional<std::size_t> value;
  std::size_t orbit_length = 0;

  bool censored() const { return !value.has_value(); }
};

/// Smallest N such that (1/n) sum_{i<=n} a_i < -b/2 for all N <= n <= L.
ExpansionTimeRecord expansion_time(std::span<const double> series, double b);

/// Streaming form: feed a_1..a_L, then finish().
class ExpansionTimeTracker {
 public:
  explicit ExpansionTimeTracker(double b) : b_(b) {}
  void push(double a);
  ExpansionTimeRecord finish() const;

 private:
  double b_;
  long double sum_ = 0.0L;
  std::size_t n_ = 0;
  std::size_t last_violation_ = 0;
};

struct TailFit {
  bool valid = false;
  double c = 0.0;          // decay constant
  double tau = 1.0;        // stretch exponent
  double log_amplitude = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

struct TailCurve {
  double b = 0.0;
  std::size_t sample_size = 0;
  std::size_t censored = 0;
  std::vector<std::size_t> n_grid;
  std::vector<double> survival;
  /// Censored records still counted in survival(n) (those with n <= L).
  std::vector<std::size_t> censored_count;
  TailFit exponential;  // tau fixed to 1
  TailFit stretched;    // tau free in (0, 1]
  std::vector<std::string> flags;
};

/// Survival curve of the expansion time over n_grid plus both fits. Values
/// below 5 / sample_size are treated as noise and excluded from the fits.
TailCurve tail_from_records(std::span<const ExpansionTimeRecord> records,
                            std::vector<std::size_t> n_grid);

/// Weighted least squares of log S against n^tau; weights are the counts
/// N * S(n).
TailFit fit_tail(std::span<const std::size_t> n, std::span<const double> survival,
                 std::size_t sample_size, double tau);

struct TailOptions {
  std::size_t orbit_length = 20000;
  std::size_t grid_step = 100;
  std::size_t warmup = 200;
};

/// Expansion times of every disk point (in parallel, one orbit per point),
/// survival on the grid 1, step, 2 step, ... <= n_max. Throws Error if every
/// record is censored.
TailCurve tail_distribution(const MapSpec& map, std::span<const TorusPoint> disk, double b,
                            std::size_t n_max, const TailOptions& options = {},
                            const Exec& exec = {});

/// Mean of -a_n over n = 1..length along every point's orbit: the empirical
/// cu expansion rate the tail threshold is set against.
double mean_contraction(const MapSpec& map, std::span<const TorusPoint> points,
                        std::size_t length, std::size_t warmup = 200, const Exec& exec = {});

struct ContractionCheck {
  double max_violation_ratio = 0.0;  // max_k d_{n-k} / (e^{-k b/2} d_n)
  std::vector<double> ratios;        // d_{n-k} / d_n for k = 1..n
  double initial_offset = 0.0;       // Euclidean |y - x| at time 0
  double distance_at_n = 0.0;        // Euclidean d(f^n x, f^n y)
};

/// Places y = x + eps * cu_direction with eps chosen so that
/// d(f^n x, f^n y) <= r, iterates both forward (backward iteration would
/// amplify rounding along E^s), and compares adapted-metric distances
/// d(f^{n-k} x, f^{n-k} y) against e^{-k b/2} d(f^n x, f^n y).
ContractionCheck check_contraction_at_ht(const MapSpec& map, const TorusPoint& x, std::size_t n,
                                         double b, const Vec3& cu_direction, double r = 0.05);

/// Distance in the adapted metric between nearby points.
double adapted_distance(const MapSpec& map, const TorusPoint& a, const TorusPoint& b);

}  // namespace phlab
