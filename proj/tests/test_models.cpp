#include "oracles.hpp"

#include "phlab/models.hpp"
#include "phlab/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace phlab;

TEST_SUITE("torus") {
  TEST_CASE("distance is a bounded symmetric metric") {
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
      const TorusPoint a = rng.torus_point(), b = rng.torus_point(), c = rng.torus_point();
      const double ab = torus_distance(a, b);
      CHECK(ab == torus_distance(b, a));
      CHECK(ab <= std::sqrt(3.0) / 2.0 + 1e-15);
      CHECK(ab <= torus_distance(a, c) + torus_distance(c, b) + 1e-15);
    }
    CHECK(torus_distance(TorusPoint(0.05, 0, 0), TorusPoint(0.95, 0, 0)) ==
          doctest::Approx(0.1).epsilon(1e-12));
    CHECK(torus_distance(TorusPoint(0.5, 0.5, 0.5), TorusPoint(0, 0, 0)) ==
          doctest::Approx(std::sqrt(3.0) / 2.0));
  }

  TEST_CASE("points wrap into the unit cube") {
    const TorusPoint x(Vec3(1.25, -0.25, 3.0));
    CHECK(x[0] == doctest::Approx(0.25));
    CHECK(x[1] == doctest::Approx(0.75));
    CHECK(x[2] == 0.0);
    const TorusPoint y(Vec3(-1e-18, 0, 0));
    CHECK(y[0] >= 0.0);
    CHECK(y[0] < 1.0);
  }
}

TEST_SUITE("models") {
  TEST_CASE("spectrum of the default matrix matches the root oracle") {
    const auto roots = oracle::characteristic_roots(oracle::default_matrix());
    REQUIRE(roots.size() == 3);
    const EigenData e = eigen_data(default_matrix());
    for (int i = 0; i < 3; ++i) CHECK(e.k[i] == doctest::Approx(roots[i]).epsilon(1e-12));
    CHECK(e.k[0] == doctest::Approx(0.19806226).epsilon(1e-7));
    CHECK(e.k[1] == doctest::Approx(1.55495813).epsilon(1e-7));
    CHECK(e.k[2] == doctest::Approx(3.24697960).epsilon(1e-7));
    CHECK(e.k[0] * e.k[1] * e.k[2] == doctest::Approx(1.0).epsilon(1e-13));
    const Mat3 A = default_matrix().cast<double>();
    for (int i = 0; i < 3; ++i) {
      CHECK((A * e.v[i] - e.k[i] * e.v[i]).norm() < 1e-13);
      CHECK(e.v[i].norm() == doctest::Approx(1.0));
    }
  }

  TEST_CASE("invalid bases are rejected") {
    IntMat3 m = IntMat3::Identity();
    m(0, 0) = 2;
    CHECK_THROWS_WITH_AS(make_anosov(m), doctest::Contains("det"), ValidationError);
    IntMat3 cat = IntMat3::Zero();  // 2D cat map plus a unit eigenvalue
    cat(0, 0) = 2;
    cat(0, 1) = 1;
    cat(1, 0) = 1;
    cat(1, 1) = 1;
    cat(2, 2) = 1;
    CHECK_THROWS_AS(make_anosov(cat), ValidationError);
    IntMat3 rot = IntMat3::Zero();  // permutation: eigenvalues on the unit circle
    rot(0, 1) = 1;
    rot(1, 2) = 1;
    rot(2, 0) = 1;
    CHECK_THROWS_AS(make_anosov(rot), ValidationError);
  }

  TEST_CASE("linear periodic points match the determinant oracle") {
    for (int n = 1; n <= 4; ++n) {
      const auto pts = linear_periodic_points(default_matrix(), n);
      CHECK(static_cast<std::int64_t>(pts.size()) ==
            oracle::fixed_point_count(oracle::default_matrix(), n));
      const MapSpec f(make_anosov(default_matrix()));
      for (const auto& p : pts) {
        TorusPoint y = p;
        for (int i = 0; i < n; ++i) y = f.apply(y);
        CHECK(torus_distance(y, p) < 1e-12);
      }
    }
  }

  TEST_CASE("Mañé strength bounds") {
    const auto base = make_anosov(default_matrix());
    const auto m = make_mane(base, 0.05);
    CHECK(m.strength == doctest::Approx(1.0 - 1.0 / base.eigen.k[1]));
    CHECK_THROWS_AS(make_mane(base, 0.05, 1.0), ValidationError);
    CHECK_THROWS_AS(make_mane(base, 0.05, -0.1), ValidationError);
    CHECK_THROWS_AS(make_mane(base, -0.01), ValidationError);
    CHECK_THROWS_AS(make_mane(base, 0.4), ValidationError);
  }

  TEST_CASE("derivative matches finite differences") {
    const MapSpec f(make_mane(make_anosov(default_matrix()), 0.05));
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
      // points concentrated in the bump
      const Vec3 z = 0.05 * Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      const Mat3 D = f.derivative_lift(z);
      const double h = 1e-6;
      for (int j = 0; j < 3; ++j) {
        Vec3 e = Vec3::Zero();
        e[j] = h;
        const Vec3 fd = (f.apply_lift(z + e) - f.apply_lift(z - e)) / (2 * h);
        CHECK((fd - D.col(j)).norm() < 1e-7);
      }
      const Mat3 E = f.to_eigen() * D * f.eigenbasis();
      CHECK((E - f.derivative_eigen(TorusPoint(z))).norm() < 1e-12);
    }
  }

  TEST_CASE("inverse undoes the map") {
    const MapSpec f(make_mane(make_anosov(default_matrix()), 0.05));
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
      const TorusPoint x = i % 2 ? rng.torus_point()
                                 : TorusPoint(0.04 * rng.uniform(-1, 1), 0.04 * rng.uniform(-1, 1),
                                              0.04 * rng.uniform(-1, 1));
      CHECK(torus_distance(f.inverse_apply(f.apply(x)), x) < 1e-12);
    }
  }

  TEST_CASE("center direction is invariant and expanded at least by one") {
    const MapSpec f(make_mane(make_anosov(default_matrix()), 0.05));
    Rng rng(9);
    const Vec3 v2 = f.center_direction();
    for (int i = 0; i < 1000; ++i) {
      const TorusPoint x(0.05 * rng.uniform(-1, 1), 0.05 * rng.uniform(-1, 1),
                         0.05 * rng.uniform(-1, 1));
      const Vec3 w = f.derivative(x) * v2;
      CHECK(w.cross(v2).norm() < 1e-12);
      CHECK(f.center_derivative(x) >= 1.0 - 1e-12);
    }
    CHECK(f.center_derivative(TorusPoint(0, 0, 0)) == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("the unperturbed spec is the linear map") {
    const auto base = make_anosov(default_matrix());
    const MapSpec lin(base), zero(make_mane(base, 0.0));
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
      const TorusPoint x = rng.torus_point();
      CHECK(lin.apply(x) == zero.apply(x));
    }
    const auto v = validate_mane_spec(make_mane(base, 0.0), 64);
    CHECK(v.pass);
  }

  TEST_CASE("a weaker strength leaves p expanding along the center") {
    const auto base = make_anosov(default_matrix());
    const auto v = validate_mane_spec(make_mane(base, 0.05, 0.2), 64);
    CHECK(v.pass);
    CHECK(v.min_center_derivative > 1.0);
  }
}
