#pragma once

#include "phlab/cocycle.hpp"
#include "phlab/models.hpp"
#include "phlab/observables.hpp"
#include "phlab/parallel.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace phlab {

/// Neumaier summation.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  void add(const CompensatedSum& other) {
    add(other.sum_);
    add(other.comp_);
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Fingerprint of the empirical measure of one orbit segment.
struct EmpiricalMeasure {
  std::vector<double> averages;   // kDictionarySize entries, dictionary order
  std::vector<double> histogram;  // kHistogramCells entries, sums to 1
  std::size_t n_avg = 0;
  std::size_t n_transient = 0;
  TorusPoint seed_point;
};

/// Streaming accumulation of dictionary sums and cell counts.
class BirkhoffAccumulator {
 public:
  BirkhoffAccumulator();
  void add(const TorusPoint& x);
  void merge(const BirkhoffAccumulator& other);
  std::size_t count() const { return count_; }
  EmpiricalMeasure finish(const TorusPoint& seed, std::size_t n_transient);

 private:
  static constexpr std::size_t kBlock = 256;
  void flush();

  // Plain sums over blocks of kBlock samples, compensated across blocks.
  std::array<CompensatedSum, kDictionarySize> sums_;
  DictionaryValues block_{};
  std::size_t in_block_ = 0;
  std::vector<std::uint64_t> cells_;
  std::size_t count_ = 0;
  DictionaryValues scratch_{};
};

/// Averages over iterates n_transient + 1 .. n_transient + n_avg of x.
/// Requires n_avg >= 1e4.
EmpiricalMeasure birkhoff(const MapSpec& map, const TorusPoint& x, std::size_t n_transient,
                          std::size_t n_avg);

/// Same without the sample-size precondition; basin scans use it to detect
/// undersampling instead of refusing.
EmpiricalMeasure empirical_measure(const MapSpec& map, const TorusPoint& x,
                                   std::size_t n_transient, std::size_t n_avg);

/// Birkhoff average of a single observable, compensated.
double birkhoff_average(const MapSpec& map, const TorusPoint& x, const Observable& phi,
                        std::size_t n_transient, std::size_t n_avg);

/// Length-weighted combination of two measures of disjoint segments.
EmpiricalMeasure combine(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

/// Sup distance over the dictionary averages.
double fingerprint_distance(const std::vector<double>& a, const std::vector<double>& b);

/// Dictionary averages of Lebesgue measure (all zero).
std::vector<double> lebesgue_fingerprint();

std::vector<TorusPoint> lebesgue_seeds(std::uint64_t root, std::size_t count);
/// Cell (i, j, k) of a g^3 grid, jittered uniformly inside the cell.
std::vector<TorusPoint> jittered_grid(std::uint64_t root, int g);

struct MeasureOptions {
  std::size_t n_transient = 1000;
  std::size_t n_avg = 100000;
};

std::vector<EmpiricalMeasure> sample_measures(const MapSpec& map,
                                              const std::vector<TorusPoint>& seeds,
                                              const MeasureOptions& options, const Exec& exec = {});

constexpr int kUnresolved = -1;

struct BasinReport {
  double eps = 0.0;
  /// Single-linkage clusters holding at least 5% of the seeds.
  std::size_t cluster_count = 0;
  /// Every single-linkage component, however small.
  std::size_t component_count = 0;
  std::vector<std::vector<double>> centroids;  // major clusters, largest first
  std::vector<std::size_t> cluster_sizes;
  /// Major cluster index per seed, or kUnresolved when the seed is farther
  /// than 2 eps from every centroid or within 2 eps of several.
  std::vector<int> assignment;
  double coverage = 0.0;
  double min_centroid_separation = std::numeric_limits<double>::infinity();
  std::vector<std::string> flags;
};

BasinReport cluster_fingerprints(const std::vector<std::vector<double>>& fingerprints,
                                 double eps);
BasinReport cluster_measures(const std::vector<EmpiricalMeasure>& measures, double eps = 0.05);

struct BasinOptions {
  MeasureOptions measure;
  double eps = 0.05;
  std::uint64_t rng_seed = 1;
};

struct BasinMap {
  std::vector<TorusPoint> seeds;
  std::vector<EmpiricalMeasure> measures;
  BasinReport report;
};

/// Requires g >= 5.
BasinMap basin_map(const MapSpec& map, int g, const BasinOptions& options, const Exec& exec = {});

struct CenterExponent {
  double mean = 0.0;
  double standard_error = 0.0;
  std::vector<double> values;
  /// mean > 3 standard errors.
  bool positive = false;
};

/// Mean middle finite-time exponent over the seeds (>= 10 seeds).
CenterExponent center_exponent_of_cluster(const MapSpec& map, const std::vector<TorusPoint>& seeds,
                                          std::size_t n, std::size_t warmup = 200,
                                          TimeDirection direction = TimeDirection::Forward,
                                          const Exec& exec = {});

enum class SweepParameter { RhoU, Delta };

struct SweepOptions {
  SweepParameter parameter = SweepParameter::RhoU;
  double rho_u = 0.05;  // fixed when sweeping delta
  /// Fixed when sweeping rho_u; empty means 1 - 1/k2.
  std::optional<double> delta;
  std::size_t seeds = 40;
  MeasureOptions measure{1000, 200000};
  double eps = 0.05;
  int grid_n = 64;
  std::uint64_t rng_seed = 1;
};

struct SweepPoint {
  double value = 0.0;
  bool valid = false;
  std::string flag;
  std::size_t cluster_count = 0;
  double coverage = 0.0;
  std::vector<double> fingerprint;  // centroid of the largest cluster
  /// To the previous valid point; NaN for the first.
  double distance_to_previous = std::numeric_limits<double>::quiet_NaN();
  double distance_to_lebesgue = 0.0;
};

/// The values must be strictly increasing. A point whose spec fails
/// validation is skipped and flagged.
std::vector<SweepPoint> parameter_sweep(const AnosovSpec& base, const std::vector<double>& values,
                                        const SweepOptions& options, const Exec& exec = {});

}  // namespace phlab
