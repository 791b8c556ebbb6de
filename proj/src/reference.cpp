#include "phlab/reference.hpp"

#include "phlab/rng.hpp"

#include <cmath>

namespace phlab::reference {

EmpiricalMeasure empirical_measure(const MapSpec& map, const TorusPoint& x,
                                   std::size_t n_transient, std::size_t n_avg) {
  const auto dict = dictionary();
  TorusPoint y = x;
  for (std::size_t i = 0; i < n_transient; ++i) y = map.apply(y);
  std::vector<CompensatedSum> sums(dict.size());
  std::vector<double> counts(kHistogramCells, 0.0);
  for (std::size_t i = 0; i < n_avg; ++i) {
    y = map.apply(y);
    for (std::size_t k = 0; k < dict.size(); ++k) sums[k].add(dict[k](y));
    int c[3];
    for (int j = 0; j < 3; ++j) {
      c[j] = static_cast<int>(std::floor(y[j] * kHistogramBins));
      if (c[j] >= kHistogramBins) c[j] = kHistogramBins - 1;
    }
    counts[(static_cast<std::size_t>(c[0]) * kHistogramBins + c[1]) * kHistogramBins + c[2]] += 1.0;
  }
  EmpiricalMeasure m;
  m.seed_point = x;
  m.n_transient = n_transient;
  m.n_avg = n_avg;
  const double n = static_cast<double>(n_avg);
  for (const auto& s : sums) m.averages.push_back(s.value() / n);
  for (double c : counts) m.histogram.push_back(c / n);
  return m;
}

std::vector<EmpiricalMeasure> sample_measures(const MapSpec& map,
                                              const std::vector<TorusPoint>& seeds,
                                              const MeasureOptions& options) {
  std::vector<EmpiricalMeasure> out;
  out.reserve(seeds.size());
  for (const auto& x : seeds) {
    out.push_back(reference::empirical_measure(map, x, options.n_transient, options.n_avg));
  }
  return out;
}

CorrelationSeries lebesgue_correlation(const MapSpec& map, const Observable& phi,
                                       const Observable& psi, std::size_t n_max,
                                       std::size_t seeds, std::uint64_t rng_seed) {
  const std::size_t lags = n_max + 1;
  std::vector<double> u(seeds);
  std::vector<std::vector<double>> v(lags, std::vector<double>(seeds));
  for (std::size_t i = 0; i < seeds; ++i) {
    TorusPoint x = Rng(rng_seed, i).torus_point();
    u[i] = phi(x);
    for (std::size_t n = 0; n < lags; ++n) {
      if (n > 0) x = map.apply(x);
      v[n][i] = psi(x);
    }
  }
  auto mean = [](const std::vector<double>& a) {
    CompensatedSum s;
    for (double x : a) s.add(x);
    return s.value() / static_cast<double>(a.size());
  };
  CorrelationSeries out;
  out.phi = phi.name();
  out.psi = psi.name();
  const double a = mean(u);
  const double N = static_cast<double>(seeds);
  for (std::size_t n = 0; n < lags; ++n) {
    const double b = mean(v[n]);
    std::vector<double> prod(seeds);
    for (std::size_t i = 0; i < seeds; ++i) prod[i] = (u[i] - a) * (v[n][i] - b);
    const double c = mean(prod);
    CompensatedSum ss;
    for (double p : prod) ss.add((p - c) * (p - c));
    out.n_grid.push_back(n);
    out.C.push_back(c);
    out.floor.push_back(3.0 * std::sqrt(ss.value() / N / N));
  }
  for (std::size_t i = 1; i < out.floor.size(); ++i) {
    out.noise_floor = std::max(out.noise_floor, out.floor[i]);
  }
  out.fit = fit_decay(out);
  return out;
}

std::vector<ExpansionTimeRecord> expansion_times(const MapSpec& map,
                                                 const std::vector<TorusPoint>& disk, double b,
                                                 std::size_t orbit_length, std::size_t warmup) {
  std::vector<ExpansionTimeRecord> out;
  out.reserve(disk.size());
  for (const auto& x : disk) {
    const ContractionSeries s = contraction_series(map, x, orbit_length, warmup);
    out.push_back(expansion_time(s.values, b));
  }
  return out;
}

}  // namespace phlab::reference
