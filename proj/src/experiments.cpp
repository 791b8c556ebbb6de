#include "phlab/experiments.hpp"

#include "phlab/cocycle.hpp"
#include "phlab/correlation.hpp"
#include "phlab/hyperbolic_times.hpp"
#include "phlab/measures.hpp"
#include "phlab/periodic.hpp"
#include "phlab/rng.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <sstream>

namespace phlab {
namespace {

using nlohmann::ordered_json;

// ---------------------------------------------------------------- registry

std::vector<ExperimentInfo> make_registry() {
  const auto C = ParamType::Count;
  const auto R = ParamType::Real;
  const auto T = ParamType::Text;
  return {
      {"lyapunov",
       "finite-time Lyapunov spectrum and the sign of the center exponent",
       {{"n", C, "10000", "iterates per orbit"},
        {"warmup", C, "200", "frame warm-up iterates"},
        {"seeds", C, "20", "Lebesgue-random seeds"},
        {"disk_points", C, "0", "extra seeds on a skeleton-saddle unstable disk (0 skips)"},
        {"disk_radius", R, "0.01", "unstable disk radius"}}},
      {"hyp-times",
       "hyperbolic times along cu, their density and contraction at them",
       {{"L", C, "10000", "series length"},
        {"b", R, "0.4", "hyperbolicity margin"},
        {"warmup", C, "200", "frame warm-up iterates"},
        {"seeds", C, "10", "Lebesgue-random seeds"},
        {"contraction_checks", C, "5", "hyperbolic times <= 20 checked per seed"},
        {"r", R, "0.05", "distance bound at the hyperbolic time"}}},
      {"periodic",
       "periodic points of period dividing n with their multipliers",
       {{"n", C, "2", "period, at most 6"}}},
      {"skeleton",
       "saddles grouped by the physical measure their unstable disks reach",
       {{"period", C, "2", "pool: periodic points of period dividing this"},
        {"eps", R, "0.05", "fingerprint threshold"},
        {"disk_radius", R, "0.01", "unstable disk radius"},
        {"disk_points", C, "4", "disk points per saddle"},
        {"n_transient", C, "1000", "discarded iterates"},
        {"n_avg", C, "100000", "averaged iterates"}}},
      {"measures",
       "fingerprints of Lebesgue-random orbits, clustered",
       {{"seeds", C, "200", "Lebesgue-random seeds"},
        {"n_transient", C, "1000", "discarded iterates"},
        {"n_avg", C, "1000000", "averaged iterates"},
        {"eps", R, "0.05", "clustering threshold"},
        {"min_coverage", R, "0.95", "required resolved fraction"}}},
      {"basin",
       "fingerprints over a jittered g^3 grid and basin coverage",
       {{"grid", C, "6", "grid size g, at least 5"},
        {"n_transient", C, "1000", "discarded iterates"},
        {"n_avg", C, "100000", "averaged iterates"},
        {"eps", R, "0.05", "clustering threshold"},
        {"min_coverage", R, "0.95", "required resolved fraction"}}},
      {"correlation",
       "correlation functions and their exponential fits",
       {{"phi", T, "cos:1,0,0", "observables, ';'-separated"},
        {"psi", T, "cos:1,0,0", "observables, ';'-separated, paired with phi"},
        {"mode", T, "lebesgue", "lebesgue or measure"},
        {"seeds", C, "1000", "ensemble size"},
        {"n_max", C, "10", "largest lag (in powers of f^power)"},
        {"transient", C, "10000", "measure mode: discarded iterates"},
        {"window", C, "10000", "measure mode: averaging window"},
        {"power", C, "1", "correlations of f^power"},
        {"min_valid", C, "0", "pairs that must show decay (0: all)"}}},
      {"tail",
       "survival of expansion times on a skeleton-saddle unstable disk",
       {{"period", C, "2", "saddle pool: period dividing this"},
        {"disk_points", C, "1000", "disk sample size"},
        {"disk_radius", R, "0.02", "unstable disk radius"},
        {"orbit_length", C, "30000", "iterates per disk point"},
        {"grid_step", C, "500", "survival grid spacing"},
        {"warmup", C, "200", "frame warm-up iterates"},
        {"eta", R, "1.6e-5", "b = 2 (mean expansion - eta) unless b is set"},
        {"b", R, "0", "explicit b (0: derived from eta)"}}},
      {"clt",
       "batch-means variance of Birkhoff sums",
       {{"phi", T, "cos:1,0,0", "observable"},
        {"seeds", C, "20", "orbits"},
        {"transient", C, "1000", "discarded iterates"},
        {"batch_length", C, "1000", "batch length"},
        {"batch_count", C, "50", "batches per orbit, at least 20"}}},
      {"sweep",
       "physical-measure fingerprint along a parameter grid",
       {{"parameter", T, "rho_u", "rho_u or delta"},
        {"values", T, "0, 0.01, 0.02, 0.03, 0.04, 0.05", "strictly increasing grid"},
        {"delta", T, "auto", "fixed strength for a rho_u sweep"},
        {"seeds", C, "40", "Lebesgue-random seeds per point"},
        {"n_transient", C, "1000", "discarded iterates"},
        {"n_avg", C, "200000", "averaged iterates"},
        {"eps", R, "0.05", "clustering and continuity threshold"}}},
  };
}

// ---------------------------------------------------------------- helpers

std::string fmt(double v) { return format_double(v); }

std::string fmt(std::size_t v) { return std::to_string(v); }

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<double> parse_real_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s, ',')) {
    double v{};
    const char* end = item.data() + item.size();
    const auto r = std::from_chars(item.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end) {
      throw ConfigError("[parameters] " + key + ": cannot parse '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("[parameters] " + key + ": empty list");
  return out;
}

std::vector<Observable> parse_observables(const std::string& key, const std::string& s) {
  std::vector<Observable> out;
  for (const auto& item : split_list(s, ';')) {
    try {
      out.push_back(parse_observable(item));
    } catch (const ValidationError& e) {
      throw ConfigError("[parameters] " + key + ": " + e.what());
    }
  }
  if (out.empty()) throw ConfigError("[parameters] " + key + ": no observables");
  return out;
}

class Csv {
 public:
  Csv(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot write " + path.string());
    row(header);
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_field(fields[i]);
    }
    out_ << "\r\n";
  }

 private:
  std::ofstream out_;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Context {
  const MapSpec& map;
  const ExperimentConfig& config;
  const Params& params;
  Exec exec;
  std::filesystem::path out_dir;
  RunResult& result;

  Csv csv(const std::string& file, const std::vector<std::string>& header) {
    result.files.push_back(file);
    return Csv(out_dir / file, header);
  }
  void check(std::string name, bool pass, std::string detail) {
    result.checks.push_back({std::move(name), pass, std::move(detail)});
  }
  void flag(std::string f) { result.flags.push_back(std::move(f)); }
  ordered_json& summary() { return result.summary; }
};

void point_fields(const TorusPoint& x, std::vector<std::string>& row) {
  row.push_back(fmt(x[0]));
  row.push_back(fmt(x[1]));
  row.push_back(fmt(x[2]));
}

PeriodicOrbit skeleton_saddle(Context& ctx, std::size_t period) {
  const auto pool = find_periodic(ctx.map, static_cast<int>(period), ctx.exec);
  SkeletonOptions opts;
  opts.rng_seed = ctx.config.rng_seed;
  const auto sk = skeleton_candidates(ctx.map, pool, opts, ctx.exec);
  if (sk.saddles.empty()) throw Error("no hyperbolic saddle with one stable direction in the pool");
  return sk.saddles.front();
}

// ------------------------------------------------------------ experiments

void run_lyapunov(Context& ctx) {
  const auto& p = ctx.params;
  const std::size_t n = p.count("n"), warmup = p.count("warmup");
  const auto& k = ctx.map.eigen().k;
  const std::array<double, 3> expected{std::log(k[2]), std::log(k[1]), std::log(k[0])};

  struct Source {
    std::string name;
    std::vector<TorusPoint> seeds;
  };
  std::vector<Source> sources{{"lebesgue", lebesgue_seeds(ctx.config.rng_seed, p.count("seeds"))}};
  if (p.count("disk_points") > 0) {
    const PeriodicOrbit saddle = skeleton_saddle(ctx, 2);
    const auto disk = unstable_disk(ctx.map, saddle, p.real("disk_radius"), p.count("disk_points"),
                                    ctx.config.rng_seed);
    ctx.summary()["disk_saddle"] = to_string(saddle.base());
    sources.push_back({"disk", disk.points});
  }

  auto csv = ctx.csv("lyapunov.csv",
                     {"source", "index", "x", "y", "z", "lambda_u", "lambda_c", "lambda_s", "sum"});
  double max_err = 0.0, max_sum = 0.0;
  for (const auto& src : sources) {
    std::vector<FtleReport> reports(src.seeds.size());
    parallel_for(src.seeds.size(), ctx.exec,
                 [&](std::size_t i) { reports[i] = ftle(ctx.map, src.seeds[i], n, warmup); });
    std::vector<double> centers;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const auto& r = reports[i];
      std::vector<std::string> row{src.name, fmt(i)};
      point_fields(src.seeds[i], row);
      for (double e : r.exponents) row.push_back(fmt(e));
      row.push_back(fmt(r.sum()));
      csv.row(row);
      for (int j = 0; j < 3; ++j) max_err = std::max(max_err, std::abs(r.exponents[j] - expected[j]));
      max_sum = std::max(max_sum, std::abs(r.sum()));
      centers.push_back(r.center());
    }
    if (centers.size() < 10) {
      ctx.flag(src.name + ": fewer than 10 seeds, center exponent not tested");
      continue;
    }
    const CenterExponent ce = center_exponent_of_cluster(ctx.map, src.seeds, n, warmup,
                                                         TimeDirection::Forward, ctx.exec);
    ctx.summary()[src.name + "_center_exponent"] = ce.mean;
    ctx.summary()[src.name + "_center_standard_error"] = ce.standard_error;
    ctx.check("center_exponent_positive_" + src.name, ce.positive,
              "mean " + fmt(ce.mean) + ", standard error " + fmt(ce.standard_error));
  }
  ctx.summary()["expected"] = expected;
  ctx.summary()["max_abs_error_vs_eigenvalues"] = max_err;
  ctx.summary()["max_abs_sum"] = max_sum;
  if (!ctx.map.is_mane()) {
    ctx.check("exponents_match_eigenvalues", max_err <= 1e-6, "max error " + fmt(max_err));
    ctx.check("exponent_sum_zero", max_sum <= 1e-9, "max |sum| " + fmt(max_sum));
  }
}

void run_hyp_times(Context& ctx) {
  const auto& p = ctx.params;
  const std::size_t L = p.count("L"), warmup = p.count("warmup"), K = p.count("contraction_checks");
  const double b = p.real("b"), r = p.real("r");
  if (!(b > 0.0)) throw ConfigError("[parameters] b must be > 0");
  const auto seeds = lebesgue_seeds(ctx.config.rng_seed, p.count("seeds"));

  struct Row {
    HyperbolicTimeReport report;
    ExpansionTimeRecord expansion;
    double max_ratio = 0.0;
    std::size_t checked = 0;
  };
  std::vector<Row> rows(seeds.size());
  parallel_for(seeds.size(), ctx.exec, [&](std::size_t i) {
    const auto series = contraction_series(ctx.map, seeds[i], L, warmup);
    Row& row = rows[i];
    row.report = detect_hyperbolic_times(series.values, b);
    row.expansion = expansion_time(series.values, b);
    for (std::size_t t : row.report.times) {
      if (row.checked == K || t > 20) break;
      const auto c = check_contraction_at_ht(ctx.map, series.base_point, t, b,
                                             ctx.map.center_direction(), r);
      row.max_ratio = std::max(row.max_ratio, c.max_violation_ratio);
      ++row.checked;
    }
  });

  auto csv = ctx.csv("hyp_times.csv", {"index", "x", "y", "z", "b", "count", "density",
                                       "first_time", "expansion_time", "max_violation_ratio"});
  double min_density = 1.0, max_density = 0.0, max_ratio = 0.0;
  std::size_t checked = 0;
  bool expansion_one = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& row = rows[i];
    std::vector<std::string> f{fmt(i)};
    point_fields(seeds[i], f);
    f.push_back(fmt(b));
    f.push_back(fmt(row.report.times.size()));
    f.push_back(fmt(row.report.density));
    f.push_back(row.report.first_time ? fmt(*row.report.first_time) : "");
    f.push_back(row.expansion.value ? fmt(*row.expansion.value) : "");
    f.push_back(fmt(row.max_ratio));
    csv.row(f);
    min_density = std::min(min_density, row.report.density);
    max_density = std::max(max_density, row.report.density);
    max_ratio = std::max(max_ratio, row.max_ratio);
    checked += row.checked;
    expansion_one = expansion_one && row.expansion.value == std::size_t{1};
  }
  ctx.summary()["min_density"] = min_density;
  ctx.summary()["max_density"] = max_density;
  ctx.summary()["contraction_checks"] = checked;
  ctx.summary()["max_violation_ratio"] = max_ratio;
  if (!ctx.map.is_mane()) {
    const double log_k2 = std::log(ctx.map.eigen().k[1]);
    if (b < log_k2) {
      ctx.check("every_time_hyperbolic", min_density == 1.0, "min density " + fmt(min_density));
      ctx.check("expansion_time_one", expansion_one, "expansion time of every seed");
    } else if (b > log_k2) {
      ctx.check("no_time_hyperbolic", max_density == 0.0, "max density " + fmt(max_density));
    }
  } else {
    ctx.check("positive_density", min_density > 0.0, "min density " + fmt(min_density));
  }
  if (checked > 0) {
    ctx.check("contraction_at_hyperbolic_times", max_ratio <= 1.0 + 1e-9,
              "max d_{n-k} / (e^{-kb/2} d_n) = " + fmt(max_ratio));
  } else {
    ctx.flag("no hyperbolic time <= 20 to check contraction at");
  }
}

void run_periodic(Context& ctx) {
  const std::size_t n = ctx.params.count("n");
  if (n > 6) throw ConfigError("[parameters] n must be <= 6");
  PeriodicSearchStats stats;
  const auto orbits = find_periodic(ctx.map, static_cast<int>(n), ctx.exec, &stats);
  auto csv = ctx.csv("periodic.csv", {"index", "period", "x", "y", "z", "mu1", "mu2", "mu3",
                                      "stable_index", "hyperbolic", "residual"});
  double max_res = 0.0;
  std::size_t hyperbolic = 0;
  for (std::size_t i = 0; i < orbits.size(); ++i) {
    const auto& o = orbits[i];
    std::vector<std::string> f{fmt(i), std::to_string(o.period)};
    point_fields(o.base(), f);
    for (double m : o.multipliers) f.push_back(fmt(m));
    f.push_back(std::to_string(o.stable_index));
    f.push_back(o.hyperbolic ? "1" : "0");
    f.push_back(fmt(o.residual));
    csv.row(f);
    max_res = std::max(max_res, o.residual);
    hyperbolic += o.hyperbolic ? 1 : 0;
  }
  IntMat3 an = IntMat3::Identity();
  const IntMat3& a = ctx.map.base().matrix;
  for (std::size_t i = 0; i < n; ++i) an = an * a;
  const std::int64_t expected = std::abs(integer_det(an - IntMat3::Identity()));
  ctx.summary()["count"] = orbits.size();
  ctx.summary()["integer_determinant_count"] = expected;
  ctx.summary()["hyperbolic"] = hyperbolic;
  ctx.summary()["newton_seeds"] = stats.seeds;
  ctx.summary()["newton_dropped"] = stats.dropped;
  ctx.summary()["max_residual"] = max_res;
  ctx.check("residuals", max_res <= 1e-10, "max residual " + fmt(max_res));
  if (!ctx.map.is_mane()) {
    ctx.check("count_matches_integer_determinant",
              orbits.size() == static_cast<std::size_t>(expected),
              fmt(orbits.size()) + " points, |det(A^n - I)| = " + std::to_string(expected));
  }
}

void run_skeleton(Context& ctx) {
  const auto& p = ctx.params;
  const auto pool = find_periodic(ctx.map, static_cast<int>(p.count("period")), ctx.exec);
  SkeletonOptions opts;
  opts.eps = p.real("eps");
  opts.disk_radius = p.real("disk_radius");
  opts.disk_points = p.count("disk_points");
  opts.n_transient = p.count("n_transient");
  opts.n_avg = p.count("n_avg");
  opts.rng_seed = ctx.config.rng_seed;
  const auto sk = skeleton_candidates(ctx.map, pool, opts, ctx.exec);
  auto csv = ctx.csv("skeleton.csv", {"index", "period", "x", "y", "z", "stable_index",
                                      "hyperbolic", "group", "representative"});
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& o = pool[i];
    const int g = i < sk.group.size() ? sk.group[i] : -1;
    bool rep = false;
    for (const auto& s : sk.saddles) rep = rep || torus_distance(s.base(), o.base()) == 0.0;
    std::vector<std::string> f{fmt(i), std::to_string(o.period)};
    point_fields(o.base(), f);
    f.push_back(std::to_string(o.stable_index));
    f.push_back(o.hyperbolic ? "1" : "0");
    f.push_back(std::to_string(g));
    f.push_back(rep ? "1" : "0");
    csv.row(f);
  }
  for (const auto& fl : sk.flags) ctx.flag(fl);
  ordered_json reps = ordered_json::array();
  for (const auto& s : sk.saddles) {
    reps.push_back({{"point", to_string(s.base())}, {"period", s.period}});
  }
  ctx.summary()["pool"] = pool.size();
  ctx.summary()["groups"] = sk.saddles.size();
  ctx.summary()["representatives"] = reps;
  ctx.summary()["P"] = sk.P;
  ctx.check("single_group", sk.saddles.size() == 1,
            fmt(sk.saddles.size()) + " groups at eps " + fmt(opts.eps));
}

std::vector<std::string> fingerprint_header() {
  std::vector<std::string> h{"index", "x", "y", "z", "cluster"};
  for (const auto& o : dictionary()) h.push_back(o.name());
  return h;
}

void write_fingerprints(Context& ctx, const std::string& file, const std::vector<TorusPoint>& seeds,
                        const std::vector<EmpiricalMeasure>& measures, const BasinReport& rep) {
  auto csv = ctx.csv(file, fingerprint_header());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    std::vector<std::string> f{fmt(i)};
    point_fields(seeds[i], f);
    f.push_back(std::to_string(rep.assignment[i]));
    for (double a : measures[i].averages) f.push_back(fmt(a));
    csv.row(f);
  }
}

void report_clusters(Context& ctx, const BasinReport& rep, double min_coverage) {
  ctx.summary()["cluster_count"] = rep.cluster_count;
  ctx.summary()["component_count"] = rep.component_count;
  ctx.summary()["coverage"] = rep.coverage;
  ctx.summary()["cluster_sizes"] = rep.cluster_sizes;
  for (const auto& f : rep.flags) ctx.flag(f);
  ctx.check("single_cluster", rep.cluster_count == 1,
            fmt(rep.cluster_count) + " clusters at eps " + fmt(rep.eps));
  ctx.check("coverage", rep.coverage >= min_coverage,
            "coverage " + fmt(rep.coverage) + ", required " + fmt(min_coverage));
  if (!rep.centroids.empty()) {
    const double d = fingerprint_distance(rep.centroids.front(), lebesgue_fingerprint());
    ctx.summary()["distance_to_lebesgue"] = d;
    if (!ctx.map.is_mane()) {
      ctx.check("lebesgue_fingerprint", d <= rep.eps, "distance " + fmt(d));
    }
  }
}

void run_measures(Context& ctx) {
  const auto& p = ctx.params;
  const auto seeds = lebesgue_seeds(ctx.config.rng_seed, p.count("seeds"));
  const MeasureOptions mo{p.count("n_transient"), p.count("n_avg")};
  const auto measures = sample_measures(ctx.map, seeds, mo, ctx.exec);
  const BasinReport rep = cluster_measures(measures, p.real("eps"));
  write_fingerprints(ctx, "fingerprints.csv", seeds, measures, rep);
  report_clusters(ctx, rep, p.real("min_coverage"));
}

void run_basin(Context& ctx) {
  const auto& p = ctx.params;
  BasinOptions bo;
  bo.measure = {p.count("n_transient"), p.count("n_avg")};
  bo.eps = p.real("eps");
  bo.rng_seed = ctx.config.rng_seed;
  const auto bm = basin_map(ctx.map, static_cast<int>(p.count("grid")), bo, ctx.exec);
  write_fingerprints(ctx, "basin.csv", bm.seeds, bm.measures, bm.report);
  report_clusters(ctx, bm.report, p.real("min_coverage"));
}

void run_correlation(Context& ctx) {
  const auto& p = ctx.params;
  const auto phis = parse_observables("phi", p.text("phi"));
  const auto psis = parse_observables("psi", p.text("psi"));
  if (phis.size() != psis.size()) throw ConfigError("[parameters] phi and psi differ in length");
  EnsembleSpec ens;
  const std::string& mode = p.text("mode");
  if (mode == "lebesgue") {
    ens.mode = EnsembleMode::Lebesgue;
  } else if (mode == "measure") {
    ens.mode = EnsembleMode::Measure;
  } else {
    throw ConfigError("[parameters] mode must be lebesgue or measure");
  }
  ens.seeds = p.count("seeds");
  ens.rng_seed = ctx.config.rng_seed;
  ens.transient = p.count("transient");
  ens.window = p.count("window");
  const std::size_t power = p.count("power"), n_max = p.count("n_max");

  bool exact_case = !ctx.map.is_mane() && ens.mode == EnsembleMode::Lebesgue;
  for (std::size_t i = 0; i < phis.size(); ++i) {
    exact_case = exact_case && phis[i].kind != ObservableKind::Bump &&
                 psis[i].kind != ObservableKind::Bump;
  }
  const IntMat3& A = ctx.map.base().matrix;

  auto csv = ctx.csv("correlation.csv", {"pair", "phi", "psi", "n", "C", "floor"});
  auto fits = ctx.csv("correlation_fits.csv",
                      {"pair", "phi", "psi", "valid", "rate", "r2", "points", "flag"});
  std::size_t decaying = 0;
  ordered_json pairs = ordered_json::array();
  for (std::size_t i = 0; i < phis.size(); ++i) {
    const auto full = correlation(ctx.map, phis[i], psis[i], n_max * power, ens, ctx.exec);
    CorrelationSeries s;
    s.phi = full.phi;
    s.psi = full.psi;
    for (std::size_t n = 0; n <= n_max; ++n) {
      s.n_grid.push_back(n);
      s.C.push_back(full.C[n * power]);
      s.floor.push_back(full.floor[n * power]);
    }
    s.fit = fit_decay(s);
    for (std::size_t n = 0; n <= n_max; ++n) {
      csv.row({fmt(i), s.phi, s.psi, fmt(n), fmt(s.C[n]), fmt(s.floor[n])});
    }
    const DecayFit& fit = s.fit;
    fits.row({fmt(i), s.phi, s.psi, fit.valid ? "1" : "0", fmt(fit.rate), fmt(fit.r2),
              fmt(fit.points), fit.flag});
    const bool decays = fit.valid && fit.rate > 0.0 && fit.r2 >= 0.8;
    decaying += decays ? 1 : 0;
    ordered_json entry{{"phi", s.phi}, {"psi", s.psi}, {"rate", fit.rate}, {"r2", fit.r2},
                       {"points", fit.points}, {"decays", decays}};
    if (exact_case) {
      const std::size_t n0 = character_vanishing_lag(A, phis[i], psis[i], n_max * power);
      double worst = 0.0;  // |C - exact| / floor
      for (std::size_t n = 0; n <= n_max; ++n) {
        const double exact = character_correlation(A, phis[i], psis[i], n * power);
        const double dev = std::abs(s.C[n] - exact);
        worst = std::max(worst, s.floor[n] > 0.0 ? dev / s.floor[n] : (dev > 0.0 ? 1e300 : 0.0));
      }
      entry["n0"] = n0;
      entry["max_deviation_over_floor"] = worst;
      ctx.check("matches_exact_oracle_" + fmt(i), worst <= 1.0,
                s.phi + " / " + s.psi + ": max |C - exact| / floor = " + fmt(worst) +
                    ", n0 = " + fmt(n0));
    }
    pairs.push_back(entry);
  }
  ctx.summary()["pairs"] = pairs;
  ctx.summary()["decaying_pairs"] = decaying;
  if (!exact_case) {
    const std::size_t need = p.count("min_valid") == 0 ? phis.size() : p.count("min_valid");
    ctx.check("exponential_decay", decaying >= need,
              fmt(decaying) + " of " + fmt(phis.size()) + " pairs with rate > 0 and r2 >= 0.8, " +
                  fmt(need) + " required");
  }
}

void run_tail(Context& ctx) {
  const auto& p = ctx.params;
  const PeriodicOrbit saddle = skeleton_saddle(ctx, p.count("period"));
  const auto disk = unstable_disk(ctx.map, saddle, p.real("disk_radius"), p.count("disk_points"),
                                  ctx.config.rng_seed);
  TailOptions to;
  to.orbit_length = p.count("orbit_length");
  to.grid_step = p.count("grid_step");
  to.warmup = p.count("warmup");
  double b = p.real("b");
  if (b == 0.0) {
    const double m = mean_contraction(ctx.map, disk.points, to.orbit_length, to.warmup, ctx.exec);
    ctx.summary()["mean_expansion"] = m;
    b = 2.0 * (m - p.real("eta"));
  }
  if (!(b > 0.0)) throw ConfigError("[parameters] b must be > 0");
  const TailCurve tc = tail_distribution(ctx.map, disk.points, b, to.orbit_length, to, ctx.exec);
  auto csv = ctx.csv("tail.csv", {"n", "survival", "censored_count"});
  bool monotone = true;
  for (std::size_t i = 0; i < tc.n_grid.size(); ++i) {
    csv.row({fmt(tc.n_grid[i]), fmt(tc.survival[i]), fmt(tc.censored_count[i])});
    if (i > 0 && tc.survival[i] > tc.survival[i - 1]) monotone = false;
  }
  for (const auto& f : tc.flags) ctx.flag(f);
  const TailFit& e = tc.exponential;
  ctx.summary()["saddle"] = to_string(saddle.base());
  ctx.summary()["saddle_period"] = saddle.period;
  ctx.summary()["b"] = b;
  ctx.summary()["sample_size"] = tc.sample_size;
  ctx.summary()["censored"] = tc.censored;
  ctx.summary()["fit_c"] = e.c;
  ctx.summary()["fit_r2"] = e.r2;
  ctx.summary()["fit_points"] = e.points;
  ctx.summary()["stretched_tau"] = tc.stretched.tau;
  ctx.summary()["stretched_r2"] = tc.stretched.r2;
  ctx.check("survival_non_increasing", monotone, "survival over the grid");
  ctx.check("exponential_tail", e.valid && e.c > 0.0 && e.r2 >= 0.9,
            "c = " + fmt(e.c) + ", r2 = " + fmt(e.r2) + ", points " + fmt(e.points));
}

void run_clt(Context& ctx) {
  const auto& p = ctx.params;
  const auto phis = parse_observables("phi", p.text("phi"));
  if (phis.size() != 1) throw ConfigError("[parameters] phi must be a single observable");
  const Observable& phi = phis.front();
  EnsembleSpec ens;
  ens.seeds = p.count("seeds");
  ens.rng_seed = ctx.config.rng_seed;
  ens.transient = p.count("transient");
  const std::size_t batch_count = p.count("batch_count");
  if (batch_count < 20) throw ConfigError("[parameters] batch_count must be >= 20");
  const CltEstimate est =
      clt_variance(ctx.map, phi, ens, p.count("batch_length"), batch_count, ctx.exec);
  const bool exact = !ctx.map.is_mane() && phi.kind != ObservableKind::Bump;
  const double gk = exact ? green_kubo_character(ctx.map.base().matrix, phi, 64) : 0.0;
  auto csv = ctx.csv("clt.csv",
                     {"phi", "sigma2", "standard_error", "batches", "batch_length", "green_kubo"});
  csv.row({phi.name(), fmt(est.sigma2), fmt(est.standard_error), fmt(est.batches),
           fmt(est.batch_length), exact ? fmt(gk) : ""});
  ctx.summary()["sigma2"] = est.sigma2;
  ctx.summary()["standard_error"] = est.standard_error;
  if (exact) {
    ctx.summary()["green_kubo"] = gk;
    const double dev = std::abs(est.sigma2 - gk);
    ctx.check("green_kubo_agreement", dev <= 3.0 * est.standard_error,
              "|sigma2 - " + fmt(gk) + "| = " + fmt(dev) + ", 3 SE = " +
                  fmt(3.0 * est.standard_error));
  } else {
    ctx.check("variance_resolved", est.sigma2 > 3.0 * est.standard_error,
              "sigma2 " + fmt(est.sigma2) + ", SE " + fmt(est.standard_error));
  }
}

void run_sweep(Context& ctx) {
  const auto& p = ctx.params;
  SweepOptions so;
  const std::string& par = p.text("parameter");
  if (par == "rho_u") {
    so.parameter = SweepParameter::RhoU;
  } else if (par == "delta") {
    so.parameter = SweepParameter::Delta;
  } else {
    throw ConfigError("[parameters] parameter must be rho_u or delta");
  }
  const std::vector<double> values = parse_real_list("values", p.text("values"));
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) throw ConfigError("[parameters] values must increase");
  }
  so.rho_u = ctx.config.map.rho_u;
  if (p.text("delta") != "auto") so.delta = parse_real_list("delta", p.text("delta")).front();
  so.seeds = p.count("seeds");
  so.measure = {p.count("n_transient"), p.count("n_avg")};
  so.eps = p.real("eps");
  so.grid_n = ctx.config.map.grid_n;
  so.rng_seed = ctx.config.rng_seed;
  const auto points = parameter_sweep(ctx.map.base(), values, so, ctx.exec);

  auto csv = ctx.csv("sweep.csv", {"value", "valid", "flag", "cluster_count", "coverage",
                                   "distance_to_previous", "distance_to_lebesgue"});
  bool single = true, continuous = true;
  double worst_step = 0.0;
  std::optional<double> endpoint;
  std::size_t valid = 0;
  for (const auto& pt : points) {
    csv.row({fmt(pt.value), pt.valid ? "1" : "0", pt.flag, fmt(pt.cluster_count),
             pt.valid ? fmt(pt.coverage) : "",
             std::isnan(pt.distance_to_previous) ? "" : fmt(pt.distance_to_previous),
             pt.valid ? fmt(pt.distance_to_lebesgue) : ""});
    if (!pt.valid) {
      ctx.flag("value " + fmt(pt.value) + " skipped: " + pt.flag);
      continue;
    }
    ++valid;
    single = single && pt.cluster_count == 1;
    if (!std::isnan(pt.distance_to_previous)) {
      worst_step = std::max(worst_step, pt.distance_to_previous);
      continuous = continuous && pt.distance_to_previous <= so.eps;
    }
    if (pt.value == 0.0 && so.parameter == SweepParameter::RhoU) endpoint = pt.distance_to_lebesgue;
  }
  ctx.summary()["valid_points"] = valid;
  ctx.summary()["max_consecutive_distance"] = worst_step;
  ctx.check("single_cluster_everywhere", valid > 0 && single, fmt(valid) + " valid points");
  ctx.check("continuity", valid > 1 && continuous,
            "max consecutive distance " + fmt(worst_step) + ", eps " + fmt(so.eps));
  if (endpoint) {
    ctx.summary()["endpoint_distance_to_lebesgue"] = *endpoint;
    ctx.check("lebesgue_endpoint", *endpoint <= so.eps, "distance " + fmt(*endpoint));
  }
}

using Runner = std::function<void(Context&)>;

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> r{
      {"lyapunov", run_lyapunov},       {"hyp-times", run_hyp_times},
      {"periodic", run_periodic},       {"skeleton", run_skeleton},
      {"measures", run_measures},       {"basin", run_basin},
      {"correlation", run_correlation}, {"tail", run_tail},
      {"clt", run_clt},                 {"sweep", run_sweep}};
  return r;
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_registry() {
  static const std::vector<ExperimentInfo> registry = make_registry();
  return registry;
}

const ExperimentInfo& find_experiment(const std::string& name) {
  for (const auto& e : experiment_registry()) {
    if (e.name == name) return e;
  }
  std::string names;
  for (const auto& e : experiment_registry()) names += (names.empty() ? "" : ", ") + e.name;
  throw ConfigError("unknown experiment '" + name + "'; valid names: " + names);
}

Params::Params(const ExperimentInfo& info, const std::map<std::string, std::string>& raw)
    : info_(info) {
  for (const auto& ps : info.params) values_[ps.name] = ps.default_value;
  for (const auto& [key, value] : raw) {
    bool known = false;
    for (const auto& ps : info.params) known = known || ps.name == key;
    if (!known) {
      throw ConfigError("[parameters] unknown key '" + key + "' for experiment " + info.name);
    }
    values_[key] = value;
  }
  // Parse everything once so that malformed values fail before any work.
  for (const auto& ps : info.params) {
    if (ps.type == ParamType::Count) {
      count(ps.name);
    } else if (ps.type == ParamType::Real) {
      real(ps.name);
    }
  }
}

const ParamSpec& Params::spec(const std::string& key) const {
  for (const auto& ps : info_.params) {
    if (ps.name == key) return ps;
  }
  throw Error("parameter '" + key + "' is not in the schema of " + info_.name);
}

std::size_t Params::count(const std::string& key) const {
  const ParamSpec& ps = spec(key);
  const std::string& s = values_.at(key);
  double v{};
  const char* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (ps.type != ParamType::Count || r.ec != std::errc() || r.ptr != end || v != std::floor(v) ||
      v < 0.0 || v > 1e15) {
    throw ConfigError("[parameters] " + key + ": expected a count, got '" + s + "'");
  }
  // Zero is reserved for the counts whose help says what it means.
  if (v == 0.0 && ps.help.find("(0") == std::string::npos) {
    throw ConfigError("[parameters] " + key + " must be positive");
  }
  return static_cast<std::size_t>(v);
}

double Params::real(const std::string& key) const {
  const ParamSpec& ps = spec(key);
  const std::string& s = values_.at(key);
  double v{};
  const char* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (ps.type != ParamType::Real || r.ec != std::errc() || r.ptr != end || !std::isfinite(v)) {
    throw ConfigError("[parameters] " + key + ": expected a real, got '" + s + "'");
  }
  return v;
}

const std::string& Params::text(const std::string& key) const {
  spec(key);
  return values_.at(key);
}

ordered_json Params::to_json() const {
  ordered_json j = ordered_json::object();
  for (const auto& ps : info_.params) {
    switch (ps.type) {
      case ParamType::Count: j[ps.name] = count(ps.name); break;
      case ParamType::Real: j[ps.name] = real(ps.name); break;
      case ParamType::Text: j[ps.name] = text(ps.name); break;
    }
  }
  return j;
}

bool RunResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::string git_blob_hash(std::string_view bytes) {
  const std::string head = "blob " + std::to_string(bytes.size()) + '\0';
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* c = EVP_MD_CTX_new();
  const bool ok = c && EVP_DigestInit_ex(c, EVP_sha1(), nullptr) &&
                  EVP_DigestUpdate(c, head.data(), head.size()) &&
                  EVP_DigestUpdate(c, bytes.data(), bytes.size()) &&
                  EVP_DigestFinal_ex(c, md, &len);
  EVP_MD_CTX_free(c);
  if (!ok) throw Error("SHA-1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const ExperimentInfo& info = find_experiment(config.experiment);
  const Params params(info, config.parameters);
  const std::string started = utc_now();
  const MapSpec map = build_map(config.map);

  RunResult result;
  result.experiment = info.name;
  std::filesystem::create_directories(options.out_dir);
  const int workers = resolve_workers(options.workers);
  Context ctx{map, config, params, Exec{workers}, options.out_dir, result};
  runners().at(info.name)(ctx);

  const std::string canonical = serialize(config);
  ordered_json checks = ordered_json::array();
  for (const auto& c : result.checks) {
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  ordered_json& m = result.manifest;
  m["tool"] = "phlab";
  m["version"] = PHLAB_VERSION;
  m["experiment"] = info.name;
  m["config_hash"] = git_blob_hash(options.config_text.empty() ? canonical : options.config_text);
  m["config"] = canonical;
  m["map"] = map.describe();
  m["parameters"] = params.to_json();
  m["rng_seed"] = config.rng_seed;
  m["workers"] = workers;
  m["started_at"] = started;
  m["finished_at"] = utc_now();
  m["summary"] = result.summary;
  m["checks"] = checks;
  m["flags"] = result.flags;
  m["files"] = result.files;
  m["status"] = result.passed() ? "pass" : "fail";
  std::ofstream out(options.out_dir / "manifest.json", std::ios::binary);
  if (!out) throw Error("cannot write manifest.json");
  out << m.dump(2) << '\n';
  return result;
}

}  // namespace phlab
