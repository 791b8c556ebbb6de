#pragma once

#include "phlab/correlation.hpp"
#include "phlab/measures.hpp"

#include <vector>

/// Straightforward serial versions of the parallel kernels. They evaluate
/// every observable directly and keep every sample, so they are slow; tests
/// and the benchmark compare the fast kernels against them.
namespace phlab::reference {

EmpiricalMeasure empirical_measure(const MapSpec& map, const TorusPoint& x,
                                   std::size_t n_transient, std::size_t n_avg);

std::vector<EmpiricalMeasure> sample_measures(const MapSpec& map,
                                              const std::vector<TorusPoint>& seeds,
                                              const MeasureOptions& options);

/// Lebesgue-mode correlation with two passes over stored samples.
CorrelationSeries lebesgue_correlation(const MapSpec& map, const Observable& phi,
                                       const Observable& psi, std::size_t n_max,
                                       std::size_t seeds, std::uint64_t rng_seed);

/// Expansion times by storing each full contraction series.
std::vector<ExpansionTimeRecord> expansion_times(const MapSpec& map,
                                                 const std::vector<TorusPoint>& disk, double b,
                                                 std::size_t orbit_length, std::size_t warmup);

}  // namespace phlab::reference
