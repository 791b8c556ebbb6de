#include "oracles.hpp"

#include "phlab/cocycle.hpp"
#include "phlab/hyperbolic_times.hpp"
#include "phlab/reference.hpp"
#include "phlab/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace phlab;

namespace {

const AnosovSpec& base() {
  static const AnosovSpec b = make_anosov(default_matrix());
  return b;
}

std::vector<double> random_series(Rng& rng, std::size_t n, double mean, double spread) {
  std::vector<double> s(n);
  for (auto& v : s) v = mean + spread * rng.uniform(-1, 1);
  return s;
}

}  // namespace

TEST_SUITE("cocycle") {
  TEST_CASE("linear spectrum is exact") {
    const MapSpec f(base());
    const auto r = ftle(f, TorusPoint(0.3, 0.1, 0.7), 10000);
    const auto roots = oracle::characteristic_roots(oracle::default_matrix());
    CHECK(r.exponents[0] == doctest::Approx(std::log(roots[2])).epsilon(1e-9));
    CHECK(r.exponents[1] == doctest::Approx(std::log(roots[1])).epsilon(1e-9));
    CHECK(r.exponents[2] == doctest::Approx(std::log(roots[0])).epsilon(1e-9));
    CHECK(std::abs(r.sum()) < 1e-9);
  }

  TEST_CASE("short orbits are refused") {
    const MapSpec f(base());
    CHECK_THROWS_AS(ftle(f, TorusPoint(0.1, 0.2, 0.3), 999), ValidationError);
  }

  TEST_CASE("segments combine by length") {
    const MapSpec f(make_mane(base(), 0.05));
    const TorusPoint x(0.21, 0.43, 0.65);
    FtleAccumulator a(f, x), whole(f, x);
    a.warmup(200);
    whole.warmup(200);
    const auto r1 = a.advance(3000);
    const auto r2 = a.advance(5000);
    const auto r = whole.advance(8000);
    for (int j = 0; j < 3; ++j) {
      CHECK(r.exponents[j] ==
            doctest::Approx((3000 * r1.exponents[j] + 5000 * r2.exponents[j]) / 8000).epsilon(1e-12));
    }
  }

  TEST_CASE("exponent sum is the mean log Jacobian") {
    const MapSpec f(make_mane(base(), 0.05));
    TorusPoint x(0.01, 0.02, 0.005);
    const auto r = ftle(f, x, 20000, 0);
    long double s = 0.0L;
    for (int i = 0; i < 20000; ++i) {
      s += std::log(std::abs(f.derivative(x).determinant()));
      x = f.apply(x);
    }
    CHECK(r.sum() == doctest::Approx(static_cast<double>(s / 20000)).epsilon(1e-9));
  }

  TEST_CASE("inverse map flips the spectrum") {
    const MapSpec f(make_mane(base(), 0.05));
    const auto fwd = ftle(f, TorusPoint(0.3, 0.6, 0.9), 20000);
    const auto bwd = ftle(f, TorusPoint(0.3, 0.6, 0.9), 20000, 200, TimeDirection::Backward);
    CHECK(fwd.center() > 0.0);
    CHECK(bwd.center() < 0.0);
  }

  TEST_CASE("splitting of the linear map is the eigenbasis") {
    const MapSpec f(base());
    const auto fr = estimate_splitting(f, TorusPoint(0.4, 0.2, 0.9));
    CHECK(std::abs(std::abs(fr.e_s.dot(base().eigen.v[0]))) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(std::abs(fr.e_c.dot(base().eigen.v[1]))) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(std::abs(fr.e_u.dot(base().eigen.v[2]))) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(fr.residual < 1e-8);
  }

  TEST_CASE("cu co-norm of the linear map is -log k2") {
    const MapSpec f(base());
    const auto s = contraction_series(f, TorusPoint(0.1, 0.2, 0.3), 500);
    for (double a : s.values) CHECK(a == doctest::Approx(-std::log(base().eigen.k[1])).epsilon(1e-12));
  }
}

TEST_SUITE("hyperbolic_times") {
  TEST_CASE("linear detector equals the quadratic oracle") {
    Rng rng(2024);
    for (int t = 0; t < 300; ++t) {
      const std::size_t L = 1 + rng.next() % 400;
      const double b = 0.05 + 0.3 * rng.uniform();
      const auto s = random_series(rng, L, -b, 1.0);
      const auto rep = detect_hyperbolic_times(s, b);
      CHECK(rep.times == oracle::hyperbolic_times(s, b));
    }
  }

  TEST_CASE("ties on exactly representable series") {
    Rng rng(7);
    for (int t = 0; t < 300; ++t) {
      std::vector<double> s(1 + rng.next() % 100);
      for (auto& v : s) v = 0.5 * static_cast<double>(static_cast<int>(rng.next() % 5) - 3);
      CHECK(detect_hyperbolic_times(s, 0.5).times == oracle::hyperbolic_times(s, 0.5));
    }
  }

  TEST_CASE("constant series") {
    const std::vector<double> s(2000, -std::log(base().eigen.k[1]));
    CHECK(detect_hyperbolic_times(s, 0.4).density == 1.0);
    CHECK(detect_hyperbolic_times(s, 0.5).times.empty());
    CHECK(pliss_density(s, 0.4) == 1.0);
    CHECK(expansion_time(s, 0.4).value == std::size_t{1});
  }

  TEST_CASE("bad inputs") {
    const std::vector<double> s(10, -1.0);
    CHECK_THROWS_AS(detect_hyperbolic_times(s, 0.0), ValidationError);
    CHECK_THROWS_AS(pliss_density(s, 0.1), ValidationError);
  }

  TEST_CASE("expansion time equals the brute-force oracle") {
    Rng rng(99);
    for (int t = 0; t < 300; ++t) {
      const std::size_t L = 1 + rng.next() % 300;
      const double b = 0.1 + 0.5 * rng.uniform();
      const auto s = random_series(rng, L, -0.5 * b - 0.02, 0.8);
      const auto rec = expansion_time(s, b);
      CHECK(rec.value == oracle::expansion_time(s, b));
      ExpansionTimeTracker tr(b);
      for (double a : s) tr.push(a);
      CHECK(tr.finish().value == rec.value);
    }
  }

  TEST_CASE("streaming scanner agrees with the batch detector") {
    Rng rng(4);
    const auto s = random_series(rng, 5000, -0.3, 1.5);
    HyperbolicTimeScanner scan(0.2);
    std::vector<std::size_t> times;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (scan.push(s[i])) times.push_back(i + 1);
    }
    CHECK(times == detect_hyperbolic_times(s, 0.2).times);
  }

  TEST_CASE("exact exponential tail is recovered") {
    std::vector<std::size_t> n;
    std::vector<double> surv;
    for (std::size_t i = 0; i <= 40; ++i) {
      n.push_back(10 * i);
      surv.push_back(std::exp(-0.05 * 10.0 * static_cast<double>(i)));
    }
    const auto fit = fit_tail(n, surv, 1000000, 1.0);
    REQUIRE(fit.valid);
    CHECK(fit.c == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(fit.r2 > 0.999999);
  }

  TEST_CASE("survival is non-increasing") {
    Rng rng(8);
    std::vector<ExpansionTimeRecord> recs;
    for (int i = 0; i < 500; ++i) {
      ExpansionTimeRecord r;
      r.b = 0.1;
      r.orbit_length = 1000;
      if (i % 17) r.value = 1 + static_cast<std::size_t>(-200.0 * std::log(1.0 - rng.uniform()));
      if (r.value && *r.value > 1000) r.value.reset();
      recs.push_back(r);
    }
    std::vector<std::size_t> grid;
    for (std::size_t k = 1; k <= 1000; k += 50) grid.push_back(k);
    const auto tc = tail_from_records(recs, grid);
    for (std::size_t i = 1; i < tc.survival.size(); ++i) CHECK(tc.survival[i] <= tc.survival[i - 1]);
  }

  TEST_CASE("contraction at hyperbolic times of the linear map") {
    const MapSpec f(base());
    const double b = 0.4;
    for (std::size_t n : {1, 5, 12}) {
      const auto c = check_contraction_at_ht(f, TorusPoint(0.3, 0.3, 0.3), n, b,
                                             f.center_direction());
      CHECK(c.max_violation_ratio <= 1.0);
      CHECK(c.distance_at_n <= 0.05);
      for (std::size_t k = 1; k <= n; ++k) {
        CHECK(c.ratios[k - 1] ==
              doctest::Approx(std::pow(base().eigen.k[1], -static_cast<double>(k))).epsilon(1e-5));
      }
    }
  }

  TEST_CASE("tail kernel matches the stored-series reference and is schedule independent") {
    const MapSpec f(make_mane(base(), 0.05));
    Rng rng(12);
    std::vector<TorusPoint> pts;
    for (int i = 0; i < 12; ++i) pts.push_back(rng.torus_point());
    TailOptions opt;
    opt.orbit_length = 3000;
    opt.grid_step = 100;
    const double b = 0.8;
    const auto one = tail_distribution(f, pts, b, 3000, opt, Exec{1});
    const auto four = tail_distribution(f, pts, b, 3000, opt, Exec{4});
    CHECK(one.survival == four.survival);
    const auto ref = reference::expansion_times(f, pts, b, 3000, opt.warmup);
    std::vector<std::size_t> grid = one.n_grid;
    CHECK(tail_from_records(ref, grid).survival == one.survival);
  }
}
