// Serial reference kernels against the parallel ones. The Arg is the worker
// count (0 for the reference).
#include "phlab/correlation.hpp"
#include "phlab/hyperbolic_times.hpp"
#include "phlab/measures.hpp"
#include "phlab/reference.hpp"
#include "phlab/rng.hpp"

#include <benchmark/benchmark.h>

#include <thread>

using namespace phlab;

namespace {

const MapSpec& mane() {
  static const MapSpec m(make_mane(make_anosov(default_matrix()), 0.05));
  return m;
}

void workers_args(benchmark::internal::Benchmark* b) {
  b->Arg(0)->Arg(1);
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  for (int w = 2; w <= hw; w *= 2) b->Arg(w);
  b->Unit(benchmark::kMillisecond)->UseRealTime();
}

void BM_measures(benchmark::State& state) {
  const auto seeds = lebesgue_seeds(1, 16);
  const MeasureOptions mo{1000, 50000};
  const int w = static_cast<int>(state.range(0));
  for (auto _ : state) {
    if (w == 0) {
      benchmark::DoNotOptimize(reference::sample_measures(mane(), seeds, mo));
    } else {
      benchmark::DoNotOptimize(sample_measures(mane(), seeds, mo, Exec{w}));
    }
  }
  state.SetItemsProcessed(state.iterations() * 16 * 51000);
}
BENCHMARK(BM_measures)->Apply(workers_args);

void BM_correlation(benchmark::State& state) {
  const auto phi = Observable::bump(TorusPoint(0, 0, 0), 0.1, 0.5);
  const std::size_t seeds = 200000;
  EnsembleSpec e;
  e.seeds = seeds;
  const int w = static_cast<int>(state.range(0));
  for (auto _ : state) {
    if (w == 0) {
      benchmark::DoNotOptimize(reference::lebesgue_correlation(mane(), phi, phi, 10, seeds, 1));
    } else {
      benchmark::DoNotOptimize(correlation(mane(), phi, phi, 10, e, Exec{w}));
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seeds) * 11);
}
BENCHMARK(BM_correlation)->Apply(workers_args);

void BM_expansion_times(benchmark::State& state) {
  Rng rng(5);
  std::vector<TorusPoint> pts;
  for (int i = 0; i < 64; ++i) pts.push_back(rng.torus_point());
  const double b = 0.8;
  TailOptions to;
  to.orbit_length = 10000;
  const int w = static_cast<int>(state.range(0));
  for (auto _ : state) {
    if (w == 0) {
      benchmark::DoNotOptimize(reference::expansion_times(mane(), pts, b, to.orbit_length, to.warmup));
    } else {
      benchmark::DoNotOptimize(tail_distribution(mane(), pts, b, to.orbit_length, to, Exec{w}));
    }
  }
  state.SetItemsProcessed(state.iterations() * 64 * 10000);
}
BENCHMARK(BM_expansion_times)->Apply(workers_args);

}  // namespace

BENCHMARK_MAIN();
