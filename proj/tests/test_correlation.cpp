#include "oracles.hpp"

#include "phlab/correlation.hpp"
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

Observable cosine(int a, int b, int c) { return Observable::character({a, b, c}, ObservableKind::Cos); }

}  // namespace

TEST_SUITE("correlation") {
  TEST_CASE("fit of an exact exponential") {
    std::vector<std::size_t> n;
    std::vector<double> c, floor;
    for (std::size_t i = 0; i < 20; ++i) {
      n.push_back(i);
      c.push_back(std::exp(-0.3 * static_cast<double>(i)));
      floor.push_back(0.0);
    }
    const auto fit = fit_decay(n, c, floor);
    REQUIRE(fit.valid);
    CHECK(fit.rate == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(fit.r2 >= 0.999999);
  }

  TEST_CASE("floor masking keeps the noisy fit close") {
    Rng rng(10);
    std::vector<std::size_t> n;
    std::vector<double> c, floor;
    for (std::size_t i = 0; i < 60; ++i) {
      n.push_back(i);
      c.push_back(std::exp(-0.3 * static_cast<double>(i)) + 1e-4 * rng.normal());
      floor.push_back(3e-4);
    }
    const auto fit = fit_decay(n, c, floor);
    REQUIRE(fit.valid);
    CHECK(fit.rate == doctest::Approx(0.3).epsilon(0.02 / 0.3));
    CHECK(fit.last < 30);
  }

  TEST_CASE("pure noise is refused") {
    Rng rng(11);
    std::vector<std::size_t> n;
    std::vector<double> c, floor;
    for (std::size_t i = 0; i < 30; ++i) {
      n.push_back(i);
      c.push_back(1e-4 * rng.normal());
      floor.push_back(1e-3);
    }
    const auto fit = fit_decay(n, c, floor);
    CHECK_FALSE(fit.valid);
    CHECK(fit.flag == "insufficient points above noise floor");
  }

  TEST_CASE("character correlations agree with the integer oracle") {
    const auto A = oracle::default_matrix();
    const std::array<std::array<int, 3>, 5> freqs{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, -1}, {0, 1, -3}}};
    for (const auto& a : freqs) {
      for (const auto& b : freqs) {
        for (int n = 0; n <= 6; ++n) {
          const double exact = character_correlation(default_matrix(), cosine(a[0], a[1], a[2]),
                                                     cosine(b[0], b[1], b[2]), n);
          CHECK(exact == oracle::cos_cos_correlation(A, {a[0], a[1], a[2]}, {b[0], b[1], b[2]}, n));
        }
      }
    }
    const auto phi = cosine(1, 0, 0);
    CHECK(character_vanishing_lag(default_matrix(), phi, phi, 10) == 1);
    CHECK(green_kubo_character(default_matrix(), phi, 10) == 0.5);
    CHECK_THROWS_AS(character_correlation(default_matrix(), Observable::bump(TorusPoint(), 0.1, 1),
                                          phi, 1),
                    ValidationError);
  }

  TEST_CASE("estimator matches the exact linear correlations within its floor") {
    const MapSpec lin(base());
    EnsembleSpec e;
    e.seeds = 1000;
    const auto A = oracle::default_matrix();
    // A^T (1,0,0) = (0,0,1): the second pair correlates at lag 1 only
    const std::vector<std::pair<Observable, Observable>> pairs{
        {cosine(1, 0, 0), cosine(1, 0, 0)}, {cosine(0, 0, 1), cosine(1, 0, 0)}};
    for (const auto& [phi, psi] : pairs) {
      const auto s = correlation(lin, phi, psi, 8, e);
      for (std::size_t n = 0; n <= 8; ++n) {
        const double exact = oracle::cos_cos_correlation(
            A, {phi.m[0], phi.m[1], phi.m[2]}, {psi.m[0], psi.m[1], psi.m[2]}, static_cast<int>(n));
        CHECK(std::abs(s.C[n] - exact) <= s.floor[n]);
      }
    }
  }

  TEST_CASE("constant observable has zero correlation") {
    const MapSpec f(make_mane(base(), 0.05));
    EnsembleSpec e;
    e.seeds = 500;
    const auto s = correlation(f, cosine(0, 0, 0), cosine(1, 2, 0), 5, e);
    for (double c : s.C) CHECK(c == 0.0);
    e.mode = EnsembleMode::Measure;
    e.transient = 100;
    e.window = 500;
    e.seeds = 200;
    const auto m = correlation(f, cosine(0, 0, 0), cosine(1, 2, 0), 5, e);
    for (double c : m.C) CHECK(std::abs(c) < 1e-15);
    e.seeds = 199;
    CHECK_THROWS_AS(correlation(f, cosine(1, 0, 0), cosine(1, 0, 0), 5, e), ValidationError);
  }

  TEST_CASE("fast estimator equals the two-pass reference") {
    const MapSpec f(make_mane(base(), 0.05));
    const auto phi = Observable::bump(TorusPoint(0, 0, 0), 0.2, 0.5);
    const auto psi = cosine(1, 1, 0);
    EnsembleSpec e;
    e.seeds = 20000;
    e.rng_seed = 4;
    const auto fast = correlation(f, phi, psi, 6, e, Exec{1});
    const auto fast4 = correlation(f, phi, psi, 6, e, Exec{4});
    const auto ref = reference::lebesgue_correlation(f, phi, psi, 6, e.seeds, e.rng_seed);
    CHECK(fast.C == fast4.C);
    CHECK(fast.floor == fast4.floor);
    for (std::size_t n = 0; n <= 6; ++n) {
      CHECK(fast.C[n] == doctest::Approx(ref.C[n]).epsilon(1e-9));
      CHECK(fast.floor[n] == doctest::Approx(ref.floor[n]).epsilon(1e-6));
    }
  }

  TEST_CASE("batch means of i.i.d. data") {
    Rng rng(21);
    std::vector<double> x(200000);
    for (auto& v : x) v = 2.0 * rng.normal();
    const auto est = batch_means(x, 1000, 200);
    CHECK(std::abs(est.sigma2 - 4.0) <= 3.0 * est.standard_error);
    CHECK_THROWS_AS(batch_means(x, 1000, 19), ValidationError);
  }

  TEST_CASE("coboundary has vanishing variance") {
    Rng rng(22);
    std::vector<double> psi(100001), x(100000);
    for (auto& v : psi) v = rng.normal();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = psi[i + 1] - psi[i];
    const auto est = batch_means(x, 1000, 100);
    CHECK(est.sigma2 <= 3.0 * est.standard_error + 1e-2);
  }

  TEST_CASE("linear Green-Kubo variance") {
    const MapSpec lin(base());
    EnsembleSpec e;
    e.seeds = 20;
    e.transient = 100;
    const auto phi = cosine(1, 0, 0);
    const auto est = clt_variance(lin, phi, e, 1000, 50);
    const double gk = green_kubo_character(default_matrix(), phi, 64);
    CHECK(std::abs(est.sigma2 - gk) <= 3.0 * est.standard_error);
  }
}
