#include "phlab/correlation.hpp"

#include "phlab/measures.hpp"
#include "phlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace phlab {
namespace {

constexpr std::size_t kChunk = 4096;

// Raw moments of u = phi(x) and v_n = psi(f^n x). Plain sums inside a chunk,
// compensated across chunks.
struct Moments {
  explicit Moments(std::size_t lags)
      : v(lags), uv(lags), vv(lags), uuv(lags), uvv(lags), uuvv(lags) {}
  double u = 0.0, uu = 0.0;
  std::vector<double> v, uv, vv, uuv, uvv, uuvv;
};

struct MomentTotals {
  explicit MomentTotals(std::size_t lags)
      : v(lags), uv(lags), vv(lags), uuv(lags), uvv(lags), uuvv(lags) {}
  CompensatedSum u, uu;
  std::vector<CompensatedSum> v, uv, vv, uuv, uvv, uuvv;

  void add(const Moments& o) {
    u.add(o.u);
    uu.add(o.uu);
    for (std::size_t n = 0; n < v.size(); ++n) {
      v[n].add(o.v[n]);
      uv[n].add(o.uv[n]);
      vv[n].add(o.vv[n]);
      uuv[n].add(o.uuv[n]);
      uvv[n].add(o.uvv[n]);
      uuvv[n].add(o.uuvv[n]);
    }
  }
};

void lebesgue_correlation(const MapSpec& map, const Observable& phi, const Observable& psi,
                          std::size_t n_max, const EnsembleSpec& ens, const Exec& exec,
                          CorrelationSeries& out) {
  const std::size_t lags = n_max + 1;
  const std::size_t chunks = (ens.seeds + kChunk - 1) / kChunk;
  std::vector<Moments> parts(chunks, Moments(lags));
  parallel_for(chunks, exec, [&](std::size_t c) {
    Moments& m = parts[c];
    const std::size_t end = std::min(ens.seeds, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      TorusPoint x = Rng(ens.rng_seed, i).torus_point();
      const double u = phi(x);
      m.u += u;
      m.uu += u * u;
      for (std::size_t n = 0; n < lags; ++n) {
        if (n > 0) x = map.apply(x);
        const double v = psi(x);
        m.v[n] += v;
        m.vv[n] += v * v;
        if (u == 0.0) continue;  // every product term vanishes
        const double uv = u * v;
        m.uv[n] += uv;
        m.uuv[n] += u * uv;
        m.uvv[n] += uv * v;
        m.uuvv[n] += uv * uv;
      }
    }
  });
  MomentTotals total(lags);
  for (const auto& p : parts) total.add(p);

  const double N = static_cast<double>(ens.seeds);
  const double a = total.u.value() / N;
  const double euu = total.uu.value() / N;
  for (std::size_t n = 0; n < lags; ++n) {
    const double b = total.v[n].value() / N;
    const double c = total.uv[n].value() / N - a * b;
    // E[((u - a)(v - b))^2] from raw moments.
    const double second = total.uuvv[n].value() / N + b * b * euu + a * a * total.vv[n].value() / N +
                          a * a * b * b - 2.0 * b * total.uuv[n].value() / N -
                          2.0 * a * total.uvv[n].value() / N + 4.0 * a * b * (c + a * b) -
                          4.0 * a * a * b * b;
    const double var = std::max(0.0, second - c * c);
    out.n_grid.push_back(n);
    out.C.push_back(c);
    out.floor.push_back(3.0 * std::sqrt(var / N));
  }
}

void measure_correlation(const MapSpec& map, const Observable& phi, const Observable& psi,
                         std::size_t n_max, const EnsembleSpec& ens, const Exec& exec,
                         CorrelationSeries& out) {
  const std::size_t lags = n_max + 1;
  const std::size_t w = ens.window;
  std::vector<std::vector<double>> per_seed(ens.seeds);
  parallel_for(ens.seeds, exec, [&](std::size_t s) {
    TorusPoint x = Rng(ens.rng_seed, s).torus_point();
    for (std::size_t i = 0; i < ens.transient; ++i) x = map.apply(x);
    std::vector<double> u(w), v(w + n_max);
    for (std::size_t t = 0; t < w + n_max; ++t) {
      if (t < w) u[t] = phi(x);
      v[t] = psi(x);
      x = map.apply(x);
    }
    CompensatedSum su;
    for (double val : u) su.add(val);
    const double mu = su.value() / static_cast<double>(w);
    std::vector<double> c(lags);
    for (std::size_t n = 0; n < lags; ++n) {
      CompensatedSum sv, suv;
      for (std::size_t t = 0; t < w; ++t) {
        sv.add(v[t + n]);
        suv.add(u[t] * v[t + n]);
      }
      const double W = static_cast<double>(w);
      c[n] = suv.value() / W - mu * (sv.value() / W);
    }
    per_seed[s] = std::move(c);
  });
  const double N = static_cast<double>(ens.seeds);
  for (std::size_t n = 0; n < lags; ++n) {
    CompensatedSum s;
    for (const auto& c : per_seed) s.add(c[n]);
    const double mean = s.value() / N;
    CompensatedSum ss;
    for (const auto& c : per_seed) ss.add((c[n] - mean) * (c[n] - mean));
    const double sd = std::sqrt(ss.value() / (N - 1.0));
    out.n_grid.push_back(n);
    out.C.push_back(mean);
    out.floor.push_back(3.0 * sd / std::sqrt(N));
  }
}

using Freq = std::array<std::int64_t, 3>;

Freq frequency(const Observable& o) {
  if (o.kind == ObservableKind::Bump) {
    throw ValidationError("exact correlation needs character observables");
  }
  return {o.m[0], o.m[1], o.m[2]};
}

bool is_zero(const Freq& f) { return f[0] == 0 && f[1] == 0 && f[2] == 0; }

Freq negate(const Freq& f) { return {-f[0], -f[1], -f[2]}; }

// Lebesgue integral of phi_a * psi_b for characters of frequencies a, b.
double character_product(const Freq& a, ObservableKind ka, const Freq& b, ObservableKind kb) {
  const bool same = a == b, opposite = a == negate(b);
  if (ka != kb) return 0.0;
  if (ka == ObservableKind::Cos) {
    if (is_zero(a) && is_zero(b)) return 1.0;
    return same || opposite ? 0.5 : 0.0;
  }
  if (is_zero(a) || is_zero(b)) return 0.0;
  if (same) return 0.5;
  return opposite ? -0.5 : 0.0;
}

double character_mean(const Freq& a, ObservableKind k) {
  return k == ObservableKind::Cos && is_zero(a) ? 1.0 : 0.0;
}

// (A^T)^n m, or nullopt once an entry could overflow. The components along
// the two expanding directions only grow, so a vector that large never
// comes back to a shell of radius 3.
std::optional<Freq> transported(const IntMat3& A, Freq m, std::size_t n) {
  const std::int64_t amax = A.cwiseAbs().maxCoeff();
  const std::int64_t limit = std::numeric_limits<std::int64_t>::max() / (3 * amax + 1);
  for (std::size_t s = 0; s < n; ++s) {
    for (auto v : m) {
      if (v > limit || v < -limit) return std::nullopt;
    }
    Freq next{};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) next[i] += A(j, i) * m[j];
    }
    m = next;
  }
  return m;
}

}  // namespace

double character_correlation(const IntMat3& A, const Observable& phi, const Observable& psi,
                             std::size_t n) {
  const Freq a = frequency(phi);
  const Freq b0 = frequency(psi);
  const double means = character_mean(a, phi.kind) * character_mean(b0, psi.kind);
  const auto b = transported(A, b0, n);
  if (!b) return -means;
  return character_product(a, phi.kind, *b, psi.kind) - means;
}

std::size_t character_vanishing_lag(const IntMat3& A, const Observable& phi,
                                    const Observable& psi, std::size_t n_max) {
  std::size_t n0 = 0;
  for (std::size_t n = 0; n <= n_max; ++n) {
    if (character_correlation(A, phi, psi, n) != 0.0) n0 = n + 1;
  }
  return n0;
}

double green_kubo_character(const IntMat3& A, const Observable& phi, std::size_t n_max) {
  double s = character_correlation(A, phi, phi, 0);
  for (std::size_t n = 1; n <= n_max; ++n) s += 2.0 * character_correlation(A, phi, phi, n);
  return s;
}

CorrelationSeries correlation(const MapSpec& map, const Observable& phi, const Observable& psi,
                              std::size_t n_max, const EnsembleSpec& ensemble, const Exec& exec) {
  if (ensemble.seeds < 200) throw ValidationError("correlation needs an ensemble of >= 200 seeds");
  if (ensemble.mode == EnsembleMode::Measure && ensemble.window < 1) {
    throw ValidationError("measure-mode correlation needs window >= 1");
  }
  CorrelationSeries out;
  out.phi = phi.name();
  out.psi = psi.name();
  if (ensemble.mode == EnsembleMode::Lebesgue) {
    lebesgue_correlation(map, phi, psi, n_max, ensemble, exec, out);
  } else {
    measure_correlation(map, phi, psi, n_max, ensemble, exec, out);
  }
  for (std::size_t i = 1; i < out.floor.size(); ++i) {
    out.noise_floor = std::max(out.noise_floor, out.floor[i]);
  }
  out.fit = fit_decay(out);
  return out;
}

DecayFit fit_decay(std::span<const std::size_t> n, std::span<const double> values,
                   std::span<const double> floor, std::size_t n_min, std::size_t min_points) {
  DecayFit fit;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] < n_min) continue;
    const double a = std::abs(values[i]);
    if (a > floor[i] && a > 0.0) {
      xs.push_back(static_cast<double>(n[i]));
      ys.push_back(std::log(a));
      if (fit.points == 0) fit.first = n[i];
      fit.last = n[i];
      ++fit.points;
    } else {
      break;
    }
  }
  if (fit.points < min_points) {
    fit.flag = "insufficient points above noise floor";
    return fit;
  }
  const double k = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  fit.rate = -slope;
  fit.log_amplitude = my - slope * mx;
  fit.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  fit.valid = true;
  return fit;
}

DecayFit fit_decay(const CorrelationSeries& series, std::size_t n_min) {
  return fit_decay(series.n_grid, series.C, series.floor, n_min);
}

DecayFit fit_decay(const TailCurve& curve) {
  const std::vector<double> floor(curve.survival.size(),
                                  5.0 / static_cast<double>(curve.sample_size));
  return fit_decay(curve.n_grid, curve.survival, floor);
}

CltEstimate batch_means(std::span<const double> series, std::size_t batch_length,
                        std::size_t batch_count) {
  if (batch_count < 20) throw ValidationError("batch means need >= 20 batches");
  if (batch_length < 1 || series.size() < batch_length * batch_count) {
    throw ValidationError("series shorter than batch_length * batch_count");
  }
  std::vector<double> sums(batch_count);
  CompensatedSum total;
  for (std::size_t k = 0; k < batch_count; ++k) {
    CompensatedSum s;
    for (std::size_t t = 0; t < batch_length; ++t) s.add(series[k * batch_length + t]);
    sums[k] = s.value();
    total.add(s);
  }
  const double L = static_cast<double>(batch_length), K = static_cast<double>(batch_count);
  const double mean = total.value() / (L * K);
  std::vector<double> y(batch_count);
  for (std::size_t k = 0; k < batch_count; ++k) {
    const double d = sums[k] - L * mean;
    y[k] = d * d / L;
  }
  CltEstimate est;
  est.batches = batch_count;
  est.batch_length = batch_length;
  double sy = 0;
  for (double v : y) sy += v;
  est.sigma2 = sy / (K - 1.0);
  const double ybar = sy / K;
  double ss = 0;
  for (double v : y) ss += (v - ybar) * (v - ybar);
  est.standard_error = std::sqrt(ss / (K - 1.0) / K) * K / (K - 1.0);
  return est;
}

CltEstimate clt_variance(const MapSpec& map, const Observable& phi, const EnsembleSpec& ensemble,
                         std::size_t n, std::size_t batch_count, const Exec& exec) {
  if (batch_count < 20) throw ValidationError("clt_variance needs batch_count >= 20");
  if (n < 1 || ensemble.seeds < 1) throw ValidationError("clt_variance needs n, seeds >= 1");
  std::vector<std::vector<double>> sums(ensemble.seeds);
  parallel_for(ensemble.seeds, exec, [&](std::size_t s) {
    TorusPoint x = Rng(ensemble.rng_seed, s).torus_point();
    for (std::size_t i = 0; i < ensemble.transient; ++i) x = map.apply(x);
    std::vector<double> b(batch_count);
    for (std::size_t k = 0; k < batch_count; ++k) {
      CompensatedSum acc;
      for (std::size_t t = 0; t < n; ++t) {
        acc.add(phi(x));
        x = map.apply(x);
      }
      b[k] = acc.value();
    }
    sums[s] = std::move(b);
  });
  CompensatedSum total;
  for (const auto& b : sums) {
    for (double v : b) total.add(v);
  }
  const double L = static_cast<double>(n);
  const double M = static_cast<double>(ensemble.seeds * batch_count);
  const double mean = total.value() / (L * M);
  CompensatedSum sy;
  std::vector<double> y;
  y.reserve(ensemble.seeds * batch_count);
  for (const auto& b : sums) {
    for (double v : b) {
      const double d = v - L * mean;
      y.push_back(d * d / L);
      sy.add(y.back());
    }
  }
  CltEstimate est;
  est.batches = y.size();
  est.batch_length = n;
  est.sigma2 = sy.value() / (M - 1.0);
  const double ybar = sy.value() / M;
  CompensatedSum ss;
  for (double v : y) ss.add((v - ybar) * (v - ybar));
  est.standard_error = std::sqrt(ss.value() / (M - 1.0) / M) * M / (M - 1.0);
  return est;
}

}  // namespace phlab
