#include "phlab/periodic.hpp"

#include "phlab/cocycle.hpp"
#include "phlab/hyperbolic_times.hpp"
#include "phlab/measures.hpp"
#include "phlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace phlab {
namespace {

constexpr double kMergeDistance = 1e-8;
constexpr double kClosingTolerance = 1e-10;
constexpr double kPi = 3.14159265358979323846;

Mat3 period_derivative(const MapSpec& map, const std::vector<TorusPoint>& orbit) {
  Mat3 m = Mat3::Identity();
  for (const TorusPoint& x : orbit) m = map.derivative(x) * m;
  return m;
}

TorusPoint iterate(const MapSpec& map, TorusPoint x, int n) {
  for (int i = 0; i < n; ++i) x = map.apply(x);
  return x;
}

int minimal_period(const MapSpec& map, const TorusPoint& x, int n) {
  TorusPoint y = x;
  for (int d = 1; d <= n; ++d) {
    y = map.apply(y);
    if (n % d == 0 && torus_distance(x, y) <= 1e-9) return d;
  }
  return n;
}

// Removes points within kMergeDistance of an earlier one (lexicographic order).
std::vector<TorusPoint> merge_points(std::vector<TorusPoint> pts, std::size_t* merged) {
  std::sort(pts.begin(), pts.end(), lex_less);
  std::vector<TorusPoint> kept;
  for (const TorusPoint& x : pts) {
    const bool dup = std::any_of(kept.begin(), kept.end(), [&](const TorusPoint& y) {
      return torus_distance(x, y) <= kMergeDistance;
    });
    if (dup) {
      if (merged) ++*merged;
    } else {
      kept.push_back(x);
    }
  }
  return kept;
}

}  // namespace

Classification classify(const MapSpec& map, const std::vector<TorusPoint>& orbit) {
  if (orbit.empty()) throw ValidationError("classify needs a non-empty orbit");
  const Mat3 m = period_derivative(map, orbit);
  Eigen::EigenSolver<Mat3> es(m, false);
  std::array<std::complex<double>, 3> ev;
  for (int i = 0; i < 3; ++i) ev[i] = es.eigenvalues()[i];
  std::sort(ev.begin(), ev.end(),
            [](const auto& a, const auto& b) { return std::abs(a) < std::abs(b); });
  Classification c;
  c.hyperbolic = true;
  for (int i = 0; i < 3; ++i) {
    const double mod = std::abs(ev[i]);
    const bool real = std::abs(ev[i].imag()) <= 1e-12 * std::max(1.0, mod);
    c.multipliers[i] = real ? ev[i].real() : mod;
    if (mod < 1.0) ++c.stable_index;
    if (std::abs(mod - 1.0) <= 1e-8) c.hyperbolic = false;
  }
  c.det = m.determinant();
  return c;
}

PeriodicOrbit make_orbit(const MapSpec& map, const TorusPoint& x, int period) {
  if (period < 1) throw ValidationError("period must be >= 1");
  PeriodicOrbit orbit;
  orbit.period = period;
  TorusPoint y = x;
  for (int i = 0; i < period; ++i) {
    orbit.points.push_back(y);
    y = map.apply(y);
  }
  orbit.residual = torus_distance(y, x);
  if (orbit.residual > kClosingTolerance) {
    throw ValidationError("periodic orbit residual " + std::to_string(orbit.residual) +
                          " exceeds 1e-10 at " + to_string(x));
  }
  const Classification c = classify(map, orbit.points);
  orbit.multipliers = c.multipliers;
  orbit.stable_index = c.stable_index;
  orbit.hyperbolic = c.hyperbolic;
  return orbit;
}

NewtonResult newton_periodic(const MapSpec& map, const TorusPoint& seed, int n,
                             int max_iterations) {
  NewtonResult res;
  TorusPoint x = seed;
  auto residual_of = [&](const TorusPoint& z, Mat3* jac) {
    TorusPoint y = z;
    Mat3 m = Mat3::Identity();
    for (int i = 0; i < n; ++i) {
      if (jac) m = map.derivative(y) * m;
      y = map.apply(y);
    }
    if (jac) *jac = m - Mat3::Identity();
    return displacement(z, y);
  };
  Mat3 jac;
  Vec3 g = residual_of(x, &jac);
  res.residual = g.lpNorm<Eigen::Infinity>();
  if (res.residual <= 1e-14) {
    res.converged = true;
    res.point = x;
    return res;
  }
  for (int it = 1; it <= max_iterations; ++it) {
    Eigen::FullPivLU<Mat3> lu(jac);
    if (!lu.isInvertible()) break;
    const Vec3 step = lu.solve(g);
    if (!step.allFinite()) break;
    x = TorusPoint(x.coords() - step);
    g = residual_of(x, &jac);
    res.iterations = it;
    res.residual = g.lpNorm<Eigen::Infinity>();
    if (res.residual <= 1e-12 && step.lpNorm<Eigen::Infinity>() <= 1e-9) {
      // Near a degenerate root (the bump centre) Newton stalls at rounding
      // level with tiny residuals; such points are not roots.
      const Eigen::Vector3d sv = Eigen::JacobiSVD<Mat3>(jac).singularValues();
      res.converged = sv.minCoeff() >= 1e-6;
      break;
    }
  }
  res.point = x;
  return res;
}

std::vector<PeriodicOrbit> find_periodic(const MapSpec& map, int n, const Exec& exec,
                                         PeriodicSearchStats* stats) {
  if (n < 1 || n > 6) throw ValidationError("find_periodic needs 1 <= n <= 6");
  PeriodicSearchStats local;
  const auto linear = linear_periodic_points(map.base().matrix, n);
  std::vector<TorusPoint> found;
  if (map.bump_radius() <= 0.0) {
    found = linear;
    local.seeds = linear.size();
  } else {
    std::vector<TorusPoint> seeds = linear;
    const double rho = map.bump_radius();
    constexpr int kGrid = 32;
    const double h = 2.0 * rho / kGrid;
    const Vec3 p = std::get<ManeDASpec>(map.spec()).p.coords();
    for (int i = 0; i < kGrid; ++i) {
      for (int j = 0; j < kGrid; ++j) {
        for (int k = 0; k < kGrid; ++k) {
          const Vec3 off(-rho + (i + 0.5) * h, -rho + (j + 0.5) * h, -rho + (k + 0.5) * h);
          if (off.norm() < rho) seeds.emplace_back(p + off);
        }
      }
    }
    local.seeds = seeds.size();
    std::vector<NewtonResult> results(seeds.size());
    parallel_for(seeds.size(), exec,
                 [&](std::size_t i) { results[i] = newton_periodic(map, seeds[i], n); });
    for (const auto& r : results) {
      if (r.converged && torus_distance(iterate(map, r.point, n), r.point) <= kClosingTolerance) {
        found.push_back(r.point);
      } else {
        ++local.dropped;
      }
    }
  }
  found = merge_points(std::move(found), &local.merged);

  std::vector<PeriodicOrbit> out(found.size());
  parallel_for(found.size(), exec, [&](std::size_t i) {
    out[i] = make_orbit(map, found[i], minimal_period(map, found[i], n));
  });
  if (stats) *stats = local;
  return out;
}

// ---------------------------------------------------------------------------

std::vector<QuasiHyperbolicSegment> quasi_hyperbolic_recurrence(
    const MapSpec& map, const TorusPoint& x, double lambda, double rho, std::size_t length,
    const RecurrenceOptions& options) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw ValidationError("lambda must lie in (0, 1)");
  if (!(rho >= 0.0 && rho <= 0.05)) throw ValidationError("rho must lie in [0, 0.05]");
  std::vector<QuasiHyperbolicSegment> out;
  CuTransport cu(map, x, options.warmup);
  HyperbolicTimeScanner scan(-std::log(lambda));
  struct Hit {
    std::size_t n;
    TorusPoint point;
  };
  std::deque<Hit> recent;
  for (std::size_t n = 1; n <= length && out.size() < options.max_segments; ++n) {
    const bool hit = scan.push(cu.step());
    if (!hit) continue;
    const TorusPoint here = cu.point();
    while (!recent.empty() && n - recent.front().n > options.max_length) recent.pop_front();
    const Hit* best = nullptr;
    double best_gap = rho;
    for (const Hit& h : recent) {
      const double gap = torus_distance(h.point, here);
      if (gap <= best_gap) {
        best_gap = gap;
        best = &h;
      }
    }
    if (best) {
      out.push_back({best->point, n - best->n, lambda, best_gap, best->n});
    }
    recent.push_back({n, here});
  }
  return out;
}

double linear_shadowing_constant(const EigenData& eigen) {
  return 1.0 / (1.0 - eigen.k[0]) + 1.0 / (eigen.k[1] - 1.0);
}

ShadowResult shadow_to_periodic(const MapSpec& map, const QuasiHyperbolicSegment& segment) {
  ShadowResult out;
  if (segment.length < 1) throw ValidationError("segment length must be >= 1");
  const int n = static_cast<int>(segment.length);
  const NewtonResult nr = newton_periodic(map, segment.start, n);
  out.newton_iterations = nr.iterations;
  if (!nr.converged) {
    out.failure = "Newton did not converge (residual " + std::to_string(nr.residual) + ")";
    return out;
  }
  try {
    out.orbit = make_orbit(map, nr.point, minimal_period(map, nr.point, n));
  } catch (const ValidationError& e) {
    out.failure = e.what();
    return out;
  }
  TorusPoint a = segment.start, b = nr.point;
  for (int i = 0; i < n; ++i) {
    out.shadow_distance = std::max(out.shadow_distance, adapted_distance(map, a, b));
    a = map.apply(a);
    b = map.apply(b);
  }
  const double gap = adapted_distance(map, segment.start, a);
  out.shadow_constant = gap > 0.0 ? out.shadow_distance / gap : 0.0;
  out.success = true;
  return out;
}

// ---------------------------------------------------------------------------

SkeletonCandidate group_saddles(const std::vector<PeriodicOrbit>& pool,
                                const std::vector<std::vector<double>>& fingerprints, double eps) {
  if (pool.size() != fingerprints.size()) {
    throw ValidationError("group_saddles: one fingerprint per saddle required");
  }
  SkeletonCandidate cand;
  const std::size_t n = pool.size();
  if (n == 0) {
    cand.flags.emplace_back("empty pool");
    return cand;
  }
  cand.pairwise_related.assign(n, std::vector<bool>(n, false));
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const bool rel = i == j || fingerprint_distance(fingerprints[i], fingerprints[j]) <= eps;
      cand.pairwise_related[i][j] = rel;
      if (rel) parent[find(i)] = find(j);
    }
  }
  // Group ids follow the first appearance of each root.
  std::vector<int> id_of_root(n, -1);
  cand.group.resize(n);
  int groups = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (id_of_root[r] < 0) id_of_root[r] = groups++;
    cand.group[i] = id_of_root[r];
  }
  cand.P = 1;
  for (int g = 0; g < groups; ++g) {
    const PeriodicOrbit* rep = nullptr;
    for (std::size_t i = 0; i < n; ++i) {
      if (cand.group[i] != g) continue;
      if (!rep || pool[i].period < rep->period ||
          (pool[i].period == rep->period && lex_less(pool[i].base(), rep->base()))) {
        rep = &pool[i];
      }
    }
    cand.saddles.push_back(*rep);
    cand.P *= rep->period;
  }
  return cand;
}

SkeletonCandidate skeleton_candidates(const MapSpec& map, const std::vector<PeriodicOrbit>& pool,
                                      const SkeletonOptions& options, const Exec& exec) {
  std::vector<PeriodicOrbit> saddles;
  std::size_t skipped = 0;
  for (const auto& o : pool) {
    if (o.hyperbolic && o.stable_index == 1) {
      saddles.push_back(o);
    } else {
      ++skipped;
    }
  }
  const std::size_t m = options.disk_points;
  std::vector<TorusPoint> starts(saddles.size() * m);
  for (std::size_t s = 0; s < saddles.size(); ++s) {
    const auto disk = unstable_disk(map, saddles[s], options.disk_radius, m,
                                    stream_seed(options.rng_seed, s));
    std::copy(disk.points.begin(), disk.points.end(), starts.begin() + s * m);
  }
  std::vector<EmpiricalMeasure> measures(starts.size());
  parallel_for(starts.size(), exec, [&](std::size_t i) {
    measures[i] = birkhoff(map, starts[i], options.n_transient, options.n_avg);
  });
  std::vector<std::vector<double>> fps(saddles.size());
  for (std::size_t s = 0; s < saddles.size(); ++s) {
    std::vector<double> avg(kDictionarySize, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      const auto& a = measures[s * m + j].averages;
      for (std::size_t k = 0; k < kDictionarySize; ++k) avg[k] += a[k];
    }
    for (double& v : avg) v /= static_cast<double>(m);
    fps[s] = std::move(avg);
  }
  SkeletonCandidate cand = group_saddles(saddles, fps, options.eps);
  if (skipped > 0) {
    cand.flags.push_back(std::to_string(skipped) + " pool entries are not hyperbolic with i_s = 1");
  }
  return cand;
}

// ---------------------------------------------------------------------------

UnstableDisk unstable_disk(const MapSpec& map, const PeriodicOrbit& saddle, double r,
                           std::size_t m, std::uint64_t rng_seed) {
  if (!saddle.hyperbolic || saddle.stable_index != 1) {
    throw ValidationError("unstable_disk needs a hyperbolic saddle with i_s = 1");
  }
  if (!(r >= 0.0 && r <= 0.05)) throw ValidationError("unstable_disk needs 0 <= r <= 0.05");
  UnstableDisk disk;
  const TorusPoint& base = saddle.base();
  disk.center = base.coords();
  disk.radius = r;

  const Mat3 mono = period_derivative(map, saddle.points);
  Eigen::EigenSolver<Mat3> es(mono);
  std::array<int, 3> idx{0, 1, 2};
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return std::abs(es.eigenvalues()[a]) < std::abs(es.eigenvalues()[b]);
  });
  Vec3 a, b;
  const auto e1 = es.eigenvectors().col(idx[1]);
  const auto e2 = es.eigenvectors().col(idx[2]);
  if (std::abs(es.eigenvalues()[idx[1]].imag()) > 0.0) {
    a = e1.real();
    b = e1.imag();
  } else {
    a = e1.real();
    b = e2.real();
  }
  disk.u1 = a.normalized();
  disk.u2 = (b - b.dot(disk.u1) * disk.u1).normalized();

  if (r == 0.0) {
    disk.points.assign(m, base);
    return disk;
  }

  Eigen::Matrix<double, 3, 2> u;
  u.col(0) = disk.u1;
  u.col(1) = disk.u2;
  const Eigen::Matrix2d restricted = u.transpose() * mono * u;
  const double weakest = std::abs(es.eigenvalues()[idx[1]]);
  const int pulls = static_cast<int>(std::ceil(std::log(1e4) / std::log(weakest)));
  Eigen::Matrix2d pull = Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d inv = restricted.inverse();
  for (int i = 0; i < pulls; ++i) pull = inv * pull;
  const int steps = pulls * saddle.period;

  const std::size_t cap = 50 * std::max<std::size_t>(m, 1);
  for (std::size_t attempt = 0; attempt < cap && disk.points.size() < m; ++attempt) {
    Rng rng(rng_seed, attempt);
    const double rad = r * std::sqrt(rng.uniform());
    const double ang = 2.0 * kPi * rng.uniform();
    const Eigen::Vector2d s(rad * std::cos(ang), rad * std::sin(ang));
    const Vec3 w0 = u * (pull * s);
    const TorusPoint y = iterate(map, TorusPoint(base.coords() + w0), steps);
    const Vec3 d = displacement(base, y);
    if (d.norm() > r) {
      ++disk.trimmed;
      continue;
    }
    disk.plane_residual = std::max(disk.plane_residual, (d - u * (u.transpose() * d)).norm());
    disk.points.push_back(y);
  }
  if (disk.points.size() < m) {
    throw Error("unstable_disk: trim starvation, only " + std::to_string(disk.points.size()) +
                " of " + std::to_string(m) + " points stay within r");
  }
  return disk;
}

}  // namespace phlab
