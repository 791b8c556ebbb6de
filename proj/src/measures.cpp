#include "phlab/measures.hpp"

#include "phlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace phlab {

BirkhoffAccumulator::BirkhoffAccumulator() : cells_(kHistogramCells, 0) {}

void BirkhoffAccumulator::add(const TorusPoint& x) {
  evaluate_dictionary(x, scratch_);
  for (std::size_t k = 0; k < kDictionarySize; ++k) block_[k] += scratch_[k];
  ++cells_[histogram_cell(x)];
  ++count_;
  if (++in_block_ == kBlock) flush();
}

void BirkhoffAccumulator::flush() {
  for (std::size_t k = 0; k < kDictionarySize; ++k) {
    sums_[k].add(block_[k]);
    block_[k] = 0.0;
  }
  in_block_ = 0;
}

void BirkhoffAccumulator::merge(const BirkhoffAccumulator& other) {
  flush();
  for (std::size_t k = 0; k < kDictionarySize; ++k) {
    sums_[k].add(other.sums_[k]);
    sums_[k].add(other.block_[k]);
  }
  for (std::size_t c = 0; c < kHistogramCells; ++c) cells_[c] += other.cells_[c];
  count_ += other.count_;
}

EmpiricalMeasure BirkhoffAccumulator::finish(const TorusPoint& seed, std::size_t n_transient) {
  flush();
  EmpiricalMeasure m;
  m.seed_point = seed;
  m.n_transient = n_transient;
  m.n_avg = count_;
  m.averages.resize(kDictionarySize);
  m.histogram.resize(kHistogramCells);
  const double n = static_cast<double>(count_);
  for (std::size_t k = 0; k < kDictionarySize; ++k) m.averages[k] = sums_[k].value() / n;
  for (std::size_t c = 0; c < kHistogramCells; ++c) {
    m.histogram[c] = static_cast<double>(cells_[c]) / n;
  }
  return m;
}

EmpiricalMeasure empirical_measure(const MapSpec& map, const TorusPoint& x,
                                   std::size_t n_transient, std::size_t n_avg) {
  if (n_avg < 1) throw ValidationError("empirical_measure needs n_avg >= 1");
  TorusPoint y = x;
  for (std::size_t i = 0; i < n_transient; ++i) y = map.apply(y);
  BirkhoffAccumulator acc;
  for (std::size_t i = 0; i < n_avg; ++i) {
    y = map.apply(y);
    acc.add(y);
  }
  return acc.finish(x, n_transient);
}

EmpiricalMeasure birkhoff(const MapSpec& map, const TorusPoint& x, std::size_t n_transient,
                          std::size_t n_avg) {
  if (n_avg < 10000) throw ValidationError("birkhoff needs n_avg >= 1e4");
  return empirical_measure(map, x, n_transient, n_avg);
}

double birkhoff_average(const MapSpec& map, const TorusPoint& x, const Observable& phi,
                        std::size_t n_transient, std::size_t n_avg) {
  if (n_avg < 1) throw ValidationError("birkhoff_average needs n_avg >= 1");
  TorusPoint y = x;
  for (std::size_t i = 0; i < n_transient; ++i) y = map.apply(y);
  CompensatedSum s;
  for (std::size_t i = 0; i < n_avg; ++i) {
    y = map.apply(y);
    s.add(phi(y));
  }
  return s.value() / static_cast<double>(n_avg);
}

EmpiricalMeasure combine(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  EmpiricalMeasure out = a;
  const double na = static_cast<double>(a.n_avg), nb = static_cast<double>(b.n_avg);
  const double w = na + nb;
  for (std::size_t k = 0; k < out.averages.size(); ++k) {
    out.averages[k] = (a.averages[k] * na + b.averages[k] * nb) / w;
  }
  for (std::size_t c = 0; c < out.histogram.size(); ++c) {
    out.histogram[c] = (a.histogram[c] * na + b.histogram[c] * nb) / w;
  }
  out.n_avg = a.n_avg + b.n_avg;
  return out;
}

double fingerprint_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ValidationError("fingerprints differ in length");
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

std::vector<double> lebesgue_fingerprint() { return std::vector<double>(kDictionarySize, 0.0); }

std::vector<TorusPoint> lebesgue_seeds(std::uint64_t root, std::size_t count) {
  std::vector<TorusPoint> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(Rng(root, i).torus_point());
  return out;
}

std::vector<TorusPoint> jittered_grid(std::uint64_t root, int g) {
  std::vector<TorusPoint> out;
  out.reserve(static_cast<std::size_t>(g) * g * g);
  std::size_t idx = 0;
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      for (int k = 0; k < g; ++k) {
        Rng rng(root, idx++);
        const double a = (i + rng.uniform()) / g;
        const double b = (j + rng.uniform()) / g;
        const double c = (k + rng.uniform()) / g;
        out.emplace_back(a, b, c);
      }
    }
  }
  return out;
}

std::vector<EmpiricalMeasure> sample_measures(const MapSpec& map,
                                              const std::vector<TorusPoint>& seeds,
                                              const MeasureOptions& options, const Exec& exec) {
  std::vector<EmpiricalMeasure> out(seeds.size());
  parallel_for(seeds.size(), exec, [&](std::size_t i) {
    out[i] = empirical_measure(map, seeds[i], options.n_transient, options.n_avg);
  });
  return out;
}

// ---------------------------------------------------------------------------

BasinReport cluster_fingerprints(const std::vector<std::vector<double>>& fps, double eps) {
  if (fps.size() < 2) throw ValidationError("clustering needs at least 2 fingerprints");
  if (!(eps > 0.0)) throw ValidationError("clustering needs eps > 0");
  const std::size_t n = fps.size();
  BasinReport rep;
  rep.eps = eps;

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (find(i) == find(j)) continue;
      if (fingerprint_distance(fps[i], fps[j]) <= eps) parent[find(i)] = find(j);
    }
  }

  // Components in order of first member; major ones sorted by size.
  std::vector<std::vector<std::size_t>> components;
  std::vector<long> comp_of_root(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (comp_of_root[r] < 0) {
      comp_of_root[r] = static_cast<long>(components.size());
      components.emplace_back();
    }
    components[static_cast<std::size_t>(comp_of_root[r])].push_back(i);
  }
  rep.component_count = components.size();
  const double major_min = 0.05 * static_cast<double>(n);
  std::vector<std::size_t> major;
  for (std::size_t c = 0; c < components.size(); ++c) {
    if (static_cast<double>(components[c].size()) >= major_min) major.push_back(c);
  }
  std::stable_sort(major.begin(), major.end(), [&](std::size_t a, std::size_t b) {
    return components[a].size() > components[b].size();
  });
  rep.cluster_count = major.size();
  const std::size_t dim = fps.front().size();
  for (std::size_t c : major) {
    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i : components[c]) {
      for (std::size_t k = 0; k < dim; ++k) centroid[k] += fps[i][k];
    }
    for (double& v : centroid) v /= static_cast<double>(components[c].size());
    rep.centroids.push_back(std::move(centroid));
    rep.cluster_sizes.push_back(components[c].size());
  }
  for (std::size_t a = 0; a < rep.centroids.size(); ++a) {
    for (std::size_t b = a + 1; b < rep.centroids.size(); ++b) {
      rep.min_centroid_separation = std::min(
          rep.min_centroid_separation, fingerprint_distance(rep.centroids[a], rep.centroids[b]));
    }
  }

  rep.assignment.assign(n, kUnresolved);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    int hit = kUnresolved;
    int near = 0;
    for (std::size_t c = 0; c < rep.centroids.size(); ++c) {
      if (fingerprint_distance(fps[i], rep.centroids[c]) <= 2.0 * eps) {
        ++near;
        hit = static_cast<int>(c);
      }
    }
    if (near == 1) {
      rep.assignment[i] = hit;
      ++assigned;
    }
  }
  rep.coverage = static_cast<double>(assigned) / static_cast<double>(n);
  if (rep.cluster_count == 0) rep.flags.emplace_back("no cluster holds 5% of the seeds");
  if (rep.min_centroid_separation <= 2.0 * eps) {
    rep.flags.emplace_back("centroids closer than 2 eps");
  }
  return rep;
}

BasinReport cluster_measures(const std::vector<EmpiricalMeasure>& measures, double eps) {
  std::vector<std::vector<double>> fps;
  fps.reserve(measures.size());
  for (const auto& m : measures) fps.push_back(m.averages);
  return cluster_fingerprints(fps, eps);
}

BasinMap basin_map(const MapSpec& map, int g, const BasinOptions& options, const Exec& exec) {
  if (g < 5) throw ValidationError("basin_map needs g >= 5");
  BasinMap out;
  out.seeds = jittered_grid(options.rng_seed, g);
  out.measures = sample_measures(map, out.seeds, options.measure, exec);
  out.report = cluster_measures(out.measures, options.eps);
  if (options.measure.n_avg < 10000) out.report.flags.emplace_back("undersampled: n_avg < 1e4");
  if (out.report.coverage < 0.95) out.report.flags.emplace_back("unresolved fraction above 5%");
  return out;
}

CenterExponent center_exponent_of_cluster(const MapSpec& map, const std::vector<TorusPoint>& seeds,
                                          std::size_t n, std::size_t warmup,
                                          TimeDirection direction, const Exec& exec) {
  if (seeds.size() < 10) throw ValidationError("center exponent needs >= 10 seeds");
  CenterExponent out;
  out.values.resize(seeds.size());
  parallel_for(seeds.size(), exec, [&](std::size_t i) {
    out.values[i] = ftle(map, seeds[i], n, warmup, direction).center();
  });
  const double count = static_cast<double>(seeds.size());
  double sum = 0.0;
  for (double v : out.values) sum += v;
  out.mean = sum / count;
  double ss = 0.0;
  for (double v : out.values) ss += (v - out.mean) * (v - out.mean);
  out.standard_error = std::sqrt(ss / (count - 1.0) / count);
  out.positive = out.mean > 3.0 * out.standard_error;
  return out;
}

std::vector<SweepPoint> parameter_sweep(const AnosovSpec& base, const std::vector<double>& values,
                                        const SweepOptions& options, const Exec& exec) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) throw ValidationError("sweep values must increase");
  }
  const auto seeds = lebesgue_seeds(options.rng_seed, options.seeds);
  std::vector<SweepPoint> out;
  std::optional<std::size_t> previous;
  for (double v : values) {
    SweepPoint pt;
    pt.value = v;
    std::optional<ManeDASpec> spec;
    try {
      if (options.parameter == SweepParameter::RhoU) {
        spec = make_mane(base, v, options.delta);
      } else {
        spec = make_mane(base, options.rho_u, v);
      }
      const ManeValidation val = validate_mane_spec(*spec, options.grid_n);
      if (!val.pass) {
        pt.flag = "validation failed: " + (val.failures.empty() ? "" : val.failures.front());
        spec.reset();
      }
    } catch (const ValidationError& e) {
      pt.flag = std::string("validation failed: ") + e.what();
      spec.reset();
    }
    if (!spec) {
      out.push_back(std::move(pt));
      continue;
    }
    const MapSpec map(*spec);
    const auto measures = sample_measures(map, seeds, options.measure, exec);
    const BasinReport rep = cluster_measures(measures, options.eps);
    pt.valid = true;
    pt.cluster_count = rep.cluster_count;
    pt.coverage = rep.coverage;
    if (!rep.centroids.empty()) {
      pt.fingerprint = rep.centroids.front();
      pt.distance_to_lebesgue = fingerprint_distance(pt.fingerprint, lebesgue_fingerprint());
    }
    out.push_back(std::move(pt));
    if (!out.back().fingerprint.empty()) {
      if (previous) {
        out.back().distance_to_previous =
            fingerprint_distance(out[*previous].fingerprint, out.back().fingerprint);
      }
      previous = out.size() - 1;
    }
  }
  return out;
}

}  // namespace phlab
