// One PASS/FAIL line per criterion. Usage: phlab_acceptance [c01 ... c13]
#include "oracles.hpp"

#include "phlab/cocycle.hpp"
#include "phlab/config.hpp"
#include "phlab/correlation.hpp"
#include "phlab/experiments.hpp"
#include "phlab/hyperbolic_times.hpp"
#include "phlab/measures.hpp"
#include "phlab/periodic.hpp"
#include "phlab/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace phlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const AnosovSpec& base() {
  static const AnosovSpec b = make_anosov(default_matrix());
  return b;
}

const MapSpec& mane() {
  static const MapSpec m(make_mane(base(), 0.05));
  return m;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("phlab_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

// Runs a shipped config and reports its checks.
Outcome run_config(const std::string& file, const std::vector<std::string>& required) {
  const auto cfg = load_config(fs::path(PHLAB_CONFIG_DIR) / file);
  const fs::path dir = scratch(cfg.experiment);
  const auto r = run_experiment(cfg, RunOptions{0, dir, {}});
  Outcome o{true, ""};
  for (const auto& name : required) {
    bool found = false;
    for (const auto& c : r.checks) {
      if (c.name != name) continue;
      found = true;
      o.pass = o.pass && c.pass;
      o.detail += name + (c.pass ? " ok" : " FAILED") + " (" + c.detail + "); ";
    }
    if (!found) {
      o.pass = false;
      o.detail += name + " missing; ";
    }
  }
  fs::remove_all(dir);
  return o;
}

Outcome c01() {
  const auto r = ftle(MapSpec(base()), TorusPoint(0.3, 0.1, 0.7), 10000);
  const auto roots = oracle::characteristic_roots(oracle::default_matrix());
  double err = 0.0;
  for (int j = 0; j < 3; ++j) err = std::max(err, std::abs(r.exponents[j] - std::log(roots[2 - j])));
  return {err <= 1e-6 && std::abs(r.sum()) <= 1e-9,
          "max error " + num(err) + ", sum " + num(r.sum())};
}

Outcome c02() {
  Rng rng(2);
  int mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t L = 1 + rng.next() % 1000;
    const double b = 0.05 + 0.5 * rng.uniform();
    std::vector<double> s(L);
    for (auto& v : s) v = -b + rng.uniform(-1, 1);
    if (detect_hyperbolic_times(s, b).times != oracle::hyperbolic_times(s, b)) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " of 1000 series differ"};
}

Outcome c03() {
  const auto series = contraction_series(MapSpec(base()), TorusPoint(0.3, 0.6, 0.2), 10000);
  const auto h4 = detect_hyperbolic_times(series.values, 0.4);
  const auto h5 = detect_hyperbolic_times(series.values, 0.5);
  const auto e = expansion_time(series.values, 0.4);
  const bool pass = h4.density == 1.0 && h5.times.empty() && e.value == std::size_t{1};
  return {pass, "density(0.4) " + num(h4.density) + ", times(0.5) " +
                    std::to_string(h5.times.size()) + ", E_0.4 " +
                    (e.value ? std::to_string(*e.value) : std::string("none"))};
}

Outcome c04() {
  const MapSpec lin(base());
  bool pass = true;
  std::string detail;
  for (int n = 1; n <= 2; ++n) {
    const auto orbits = find_periodic(lin, n);
    const std::size_t points = orbits.size();
    double worst = 0.0;
    for (const auto& o : orbits) worst = std::max(worst, o.residual);
    const auto expect = oracle::fixed_point_count(oracle::default_matrix(), n);
    pass = pass && static_cast<std::int64_t>(points) == expect && worst <= 1e-10;
    detail += "n=" + std::to_string(n) + ": " + std::to_string(points) + " points (oracle " +
              std::to_string(expect) + "), residual " + num(worst) + "; ";
  }
  return {pass, detail};
}

Outcome c05() {
  const auto v = validate_mane_spec(std::get<ManeDASpec>(mane().spec()), 64);
  const bool pass = v.pass && v.min_center_derivative >= 1.0 - 1e-9 && v.argmin_cells_from_p <= 2.0 &&
                    v.min_abs_det > 0.0;
  return {pass, "min center derivative " + num(v.min_center_derivative) + " at " +
                    num(v.argmin_cells_from_p) + " cells from p, min |det| " + num(v.min_abs_det)};
}

Outcome c06() { return run_config("mane_measures.ini", {"single_cluster", "coverage"}); }

Outcome c07() {
  return run_config("mane_lyapunov.ini",
                    {"center_exponent_positive_lebesgue", "center_exponent_positive_disk"});
}

Outcome c08() {
  RecurrenceOptions ro;
  std::size_t found = 0, tried = 0;
  Rng rng(8);
  for (int s = 0; s < 20 && found == 0; ++s) {
    const auto segs =
        quasi_hyperbolic_recurrence(mane(), rng.torus_point(), std::exp(-0.2), 0.05, 1000000, ro);
    for (const auto& seg : segs) {
      ++tried;
      const auto r = shadow_to_periodic(mane(), seg);
      if (r.success && r.orbit && r.orbit->hyperbolic && r.orbit->stable_index == 1) ++found;
    }
  }
  const MapSpec lin(base());
  const double closed = linear_shadowing_constant(base().eigen);
  double worst = 0.0;
  std::size_t linear_ok = 0;
  for (int s = 0; s < 20; ++s) {
    ro.max_segments = 16;
    const auto segs =
        quasi_hyperbolic_recurrence(lin, rng.torus_point(), std::exp(-0.4), 0.05, 1000000, ro);
    for (const auto& seg : segs) {
      const auto r = shadow_to_periodic(lin, seg);
      if (!r.success) continue;
      ++linear_ok;
      worst = std::max(worst, r.shadow_constant);
    }
  }
  const bool pass = found > 0 && linear_ok > 0 && worst <= 2.0 * closed;
  return {pass, std::to_string(found) + " hyperbolic i_s=1 orbits from " + std::to_string(tried) +
                    " Mañé segments; linear: " + std::to_string(linear_ok) +
                    " shadows, worst constant " + num(worst) + " vs closed form " + num(closed)};
}

Outcome c09() {
  const MapSpec lin(base());
  const auto phi = Observable::character({1, 0, 0}, ObservableKind::Cos);
  EnsembleSpec e;
  e.seeds = 1000;
  const std::size_t n_max = 10;
  const auto s = correlation(lin, phi, phi, n_max, e);
  const auto n0 = character_vanishing_lag(default_matrix(), phi, phi, n_max);
  std::size_t bad = 0;
  for (std::size_t n = n0; n <= n_max; ++n) {
    if (std::abs(s.C[n]) > s.floor[n]) ++bad;
  }
  return {bad == 0 && n0 <= n_max,
          "n0 = " + std::to_string(n0) + ", " + std::to_string(bad) + " lags above the floor"};
}

Outcome c10() { return run_config("mane_correlation.ini", {"exponential_decay"}); }

Outcome c11() {
  return run_config("mane_tail.ini", {"survival_non_increasing", "exponential_tail"});
}

Outcome c12() {
  return run_config("mane_sweep.ini", {"single_cluster_everywhere", "continuity", "lebesgue_endpoint"});
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome c13() {
  std::string detail;
  bool pass = true;
  for (const char* text : {
           "[map]\nvariant = mane\n[experiment]\nname = measures\nrng_seed = 3\n"
           "[parameters]\nseeds = 16\nn_avg = 50000\n",
           "[map]\nvariant = mane\n[experiment]\nname = correlation\nrng_seed = 3\n"
           "[parameters]\nphi = bump:0,0,0:0.1:0.5\npsi = cos:1,1,0\nseeds = 200000\nn_max = 6\n",
           "[map]\nvariant = mane\n[experiment]\nname = tail\nrng_seed = 3\n"
           "[parameters]\ndisk_points = 64\norbit_length = 5000\ngrid_step = 100\n"}) {
    const auto cfg = parse_config(text);
    const fs::path a = scratch(cfg.experiment + "_w1"), b = scratch(cfg.experiment + "_w8");
    const auto r1 = run_experiment(cfg, RunOptions{1, a, {}});
    const auto r8 = run_experiment(cfg, RunOptions{8, b, {}});
    std::size_t same = 0, csvs = 0;
    for (const auto& f : r1.files) {
      if (fs::path(f).extension() != ".csv") continue;
      ++csvs;
      if (fs::exists(b / f) && slurp(a / f) == slurp(b / f)) ++same;
    }
    pass = pass && csvs > 0 && same == csvs && r1.files == r8.files;
    detail += cfg.experiment + " " + std::to_string(same) + "/" + std::to_string(csvs) + " identical; ";
    fs::remove_all(a);
    fs::remove_all(b);
  }
  return {pass, detail};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> all{
      {"c01", c01}, {"c02", c02}, {"c03", c03}, {"c04", c04}, {"c05", c05},
      {"c06", c06}, {"c07", c07}, {"c08", c08}, {"c09", c09}, {"c10", c10},
      {"c11", c11}, {"c12", c12}, {"c13", c13}};
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> wanted(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [id, fn] : criteria()) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), id) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS " : "FAIL ") << id << " [" << num(secs) << " s] " << o.detail
              << std::endl;
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
