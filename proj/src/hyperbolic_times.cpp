#include "phlab/hyperbolic_times.hpp"

#include <algorithm>
#include <cmath>

namespace phlab {

bool HyperbolicTimeScanner::push(double a) {
  prefix_ += static_cast<long double>(a) + static_cast<long double>(b_);
  ++n_;
  const bool hit = prefix_ <= running_min_;
  running_min_ = std::min(running_min_, prefix_);
  return hit;
}

HyperbolicTimeReport detect_hyperbolic_times(std::span<const double> series, double b) {
  if (!(b > 0.0)) throw ValidationError("hyperbolic times need b > 0");
  if (series.empty()) throw ValidationError("hyperbolic times need a non-empty series");
  HyperbolicTimeReport rep;
  rep.b = b;
  rep.length = series.size();
  HyperbolicTimeScanner scan(b);
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (scan.push(series[i])) rep.times.push_back(i + 1);
  }
  rep.density = static_cast<double>(rep.times.size()) / static_cast<double>(series.size());
  if (!rep.times.empty()) rep.first_time = rep.times.front();
  return rep;
}

double pliss_density(std::span<const double> series, double b) {
  if (series.size() < 1000) throw ValidationError("pliss_density needs L >= 1000");
  return detect_hyperbolic_times(series, b).density;
}

void ExpansionTimeTracker::push(double a) {
  sum_ += a;
  ++n_;
  if (sum_ / static_cast<long double>(n_) >= -0.5L * b_) last_violation_ = n_;
}

ExpansionTimeRecord ExpansionTimeTracker::finish() const {
  ExpansionTimeRecord rec;
  rec.b = b_;
  rec.orbit_length = n_;
  if (n_ == 0 || last_violation_ == n_) return rec;
  rec.value = last_violation_ + 1;
  return rec;
}

ExpansionTimeRecord expansion_time(std::span<const double> series, double b) {
  if (series.empty()) throw ValidationError("expansion_time needs a non-empty series");
  ExpansionTimeTracker t(b);
  for (double a : series) t.push(a);
  return t.finish();
}

TailFit fit_tail(std::span<const std::size_t> n, std::span<const double> survival,
                 std::size_t sample_size, double tau) {
  TailFit fit;
  fit.tau = tau;
  const double floor = 5.0 / static_cast<double>(sample_size);
  double sw = 0, sx = 0, sy = 0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (survival[i] <= 0.0 || survival[i] < floor) continue;
    const double w = survival[i] * static_cast<double>(sample_size);
    const double x = std::pow(static_cast<double>(n[i]), tau);
    sw += w;
    sx += w * x;
    sy += w * std::log(survival[i]);
    ++used;
  }
  fit.points = used;
  if (used < 3) return fit;
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (survival[i] <= 0.0 || survival[i] < floor) continue;
    const double w = survival[i] * static_cast<double>(sample_size);
    const double dx = std::pow(static_cast<double>(n[i]), tau) - mx;
    const double dy = std::log(survival[i]) - my;
    sxx += w * dx * dx;
    sxy += w * dx * dy;
    syy += w * dy * dy;
  }
  if (sxx <= 0.0) return fit;
  const double slope = sxy / sxx;
  fit.c = -slope;
  fit.log_amplitude = my - slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.valid = true;
  return fit;
}

TailCurve tail_from_records(std::span<const ExpansionTimeRecord> records,
                            std::vector<std::size_t> n_grid) {
  TailCurve curve;
  curve.sample_size = records.size();
  curve.n_grid = std::move(n_grid);
  if (records.empty()) throw ValidationError("tail needs at least one record");
  curve.b = records.front().b;
  for (const auto& r : records) curve.censored += r.censored() ? 1 : 0;
  if (curve.censored == records.size()) {
    throw Error("every expansion time is censored; b is too large for this orbit length");
  }
  const double total = static_cast<double>(records.size());
  for (std::size_t n : curve.n_grid) {
    std::size_t above = 0, cens = 0;
    for (const auto& r : records) {
      if (r.censored()) {
        if (n <= r.orbit_length) {
          ++above;
          ++cens;
        }
      } else if (*r.value > n) {
        ++above;
      }
    }
    curve.survival.push_back(static_cast<double>(above) / total);
    curve.censored_count.push_back(cens);
  }

  const std::size_t positive = static_cast<std::size_t>(
      std::count_if(curve.survival.begin(), curve.survival.end(), [](double s) { return s > 0; }));
  if (positive == 0) curve.flags.emplace_back("immediate expansion");
  curve.exponential = fit_tail(curve.n_grid, curve.survival, curve.sample_size, 1.0);
  TailFit best;
  for (int t = 5; t <= 100; ++t) {
    const TailFit f = fit_tail(curve.n_grid, curve.survival, curve.sample_size, t / 100.0);
    if (f.valid && (!best.valid || f.r2 > best.r2)) best = f;
  }
  curve.stretched = best;
  if (!curve.exponential.valid) curve.flags.emplace_back("fit degenerate");
  return curve;
}

TailCurve tail_distribution(const MapSpec& map, std::span<const TorusPoint> disk, double b,
                            std::size_t n_max, const TailOptions& options, const Exec& exec) {
  if (disk.empty()) throw ValidationError("tail_distribution needs disk points");
  if (n_max > options.orbit_length) {
    throw ValidationError("tail_distribution: n_max exceeds the orbit length");
  }
  std::vector<ExpansionTimeRecord> records(disk.size());
  parallel_for(disk.size(), exec, [&](std::size_t i) {
    CuTransport cu(map, disk[i], options.warmup);
    ExpansionTimeTracker tracker(b);
    for (std::size_t n = 0; n < options.orbit_length; ++n) tracker.push(cu.step());
    records[i] = tracker.finish();
  });
  std::vector<std::size_t> grid;
  const std::size_t step = std::max<std::size_t>(1, options.grid_step);
  grid.push_back(1);
  for (std::size_t n = step; n <= n_max; n += step) {
    if (n > 1) grid.push_back(n);
  }
  return tail_from_records(records, std::move(grid));
}

double mean_contraction(const MapSpec& map, std::span<const TorusPoint> points,
                        std::size_t length, std::size_t warmup, const Exec& exec) {
  if (points.empty() || length == 0) throw ValidationError("mean_contraction needs points and length");
  std::vector<double> sums(points.size());
  parallel_for(points.size(), exec, [&](std::size_t i) {
    CuTransport cu(map, points[i], warmup);
    long double acc = 0.0L;
    for (std::size_t n = 0; n < length; ++n) acc -= cu.step();
    sums[i] = static_cast<double>(acc);
  });
  long double total = 0.0L;
  for (double v : sums) total += v;
  return static_cast<double>(total / static_cast<long double>(points.size() * length));
}

double adapted_distance(const MapSpec& map, const TorusPoint& a, const TorusPoint& b) {
  return (map.to_eigen() * displacement(a, b)).norm();
}

ContractionCheck check_contraction_at_ht(const MapSpec& map, const TorusPoint& x, std::size_t n,
                                         double b, const Vec3& cu_direction, double r) {
  if (n < 1) throw ValidationError("check_contraction_at_ht needs n >= 1");
  std::vector<TorusPoint> xs(n + 1), ys(n + 1);
  xs[0] = x;
  for (std::size_t i = 0; i < n; ++i) xs[i + 1] = map.apply(xs[i]);

  ContractionCheck out;
  out.ratios.assign(n, 0.0);
  const double len = cu_direction.norm();
  if (len == 0.0) return out;
  const Vec3 dir = cu_direction / len;

  double eps = r;
  for (int attempt = 0;; ++attempt) {
    ys[0] = TorusPoint(x.coords() + eps * dir);
    for (std::size_t i = 0; i < n; ++i) ys[i + 1] = map.apply(ys[i]);
    out.distance_at_n = torus_distance(xs[n], ys[n]);
    if (out.distance_at_n <= r) break;
    if (attempt == 80) throw ValidationError("check_contraction_at_ht: cannot meet d_n <= r");
    eps *= 0.9 * r / out.distance_at_n;
  }
  out.initial_offset = eps;
  const double dn = adapted_distance(map, xs[n], ys[n]);
  for (std::size_t k = 1; k <= n; ++k) {
    const double ratio = dn > 0.0 ? adapted_distance(map, xs[n - k], ys[n - k]) / dn : 0.0;
    out.ratios[k - 1] = ratio;
    const double bound = std::exp(-static_cast<double>(k) * b / 2.0);
    out.max_violation_ratio = std::max(out.max_violation_ratio, ratio / bound);
  }
  return out;
}

}  // namespace phlab
