#pragma once

#include "phlab/hyperbolic_times.hpp"
#include "phlab/models.hpp"
#include "phlab/observables.hpp"
#include "phlab/parallel.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace phlab {

enum class EnsembleMode { Lebesgue, Measure };

struct EnsembleSpec {
  EnsembleMode mode = EnsembleMode::Lebesgue;
  std::size_t seeds = 1000;
  std::uint64_t rng_seed = 1;
  /// Measure mode: discarded iterates, then the averaging window per seed.
  std::size_t transient = 10000;
  std::size_t window = 10000;
};

struct DecayFit {
  bool valid = false;
  double rate = 0.0;
  double log_amplitude = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
  std::size_t first = 0, last = 0;  // n range used
  std::string flag;
};

struct CorrelationSeries {
  std::string phi, psi;
  std::vector<std::size_t> n_grid;
  std::vector<double> C;
  /// 3 std / sqrt(sample size), per lag.
  std::vector<double> floor;
  /// Largest per-lag floor.
  double noise_floor = 0.0;
  DecayFit fit;
};

/// C(n) = E[phi psi o f^n] - E[phi] E[psi o f^n] for n = 0..n_max. Lebesgue
/// mode averages over uniform seeds at time 0 (N >= 200); measure mode
/// averages time autocovariances over seeds after a transient.
CorrelationSeries correlation(const MapSpec& map, const Observable& phi, const Observable& psi,
                              std::size_t n_max, const EnsembleSpec& ensemble,
                              const Exec& exec = {});

/// Least squares of log |v| against n over the leading run of lags whose
/// |v| exceeds the floor, starting at n_min. Needs at least min_points.
DecayFit fit_decay(std::span<const std::size_t> n, std::span<const double> values,
                   std::span<const double> floor, std::size_t n_min = 0,
                   std::size_t min_points = 4);
DecayFit fit_decay(const CorrelationSeries& series, std::size_t n_min = 0);
/// Survival curve with floor 5 / sample_size.
DecayFit fit_decay(const TailCurve& curve);

/// Exact C(n) for two characters under the linear automorphism A. Lebesgue
/// is invariant, so C(n) = <phi, psi o A^n> - <phi><psi>, and psi o A^n is
/// the character of frequency (A^T)^n m_psi. Throws for bump observables.
double character_correlation(const IntMat3& A, const Observable& phi, const Observable& psi,
                             std::size_t n);

/// Smallest n0 such that the exact correlation vanishes for n0 <= n <= n_max.
std::size_t character_vanishing_lag(const IntMat3& A, const Observable& phi,
                                    const Observable& psi, std::size_t n_max);

/// C(0) + 2 sum_{1 <= n <= n_max} C(n) for phi = psi a character.
double green_kubo_character(const IntMat3& A, const Observable& phi, std::size_t n_max);

struct CltEstimate {
  double sigma2 = 0.0;
  double standard_error = 0.0;
  std::size_t batches = 0;
  std::size_t batch_length = 0;
};

/// Batch means over consecutive batches of one series.
CltEstimate batch_means(std::span<const double> series, std::size_t batch_length,
                        std::size_t batch_count);

/// Batch means of phi along seeds.size() orbits after the ensemble
/// transient; batch_count >= 20 batches of length n per seed.
CltEstimate clt_variance(const MapSpec& map, const Observable& phi, const EnsembleSpec& ensemble,
                         std::size_t n, std::size_t batch_count, const Exec& exec = {});

}  // namespace phlab
