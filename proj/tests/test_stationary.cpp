#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cadsim/model.hpp"
#include "cadsim/stationary.hpp"

using namespace cadsim;

namespace {

const Params kReference{0.7, 1.0, 0.25, 0.5, 0.35};

// plain 200-step bisection, independent of the solver path
double bisect_root(double rho, double a0, double a1, double eps, double lo, double hi) {
  auto f = [&](double v) { return (rho - v) * (a0 + a1 * v) * (1.0 - v) - eps * v; };
  double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("admissible equilibrium for the reference parameters", "[stationary]") {
  const CubicRootReport rep = normalized_stationary(kReference);
  REQUIRE(rep.admissible.has_value());
  CHECK(std::abs(*rep.admissible - 0.3107435) < 1e-6);
  CHECK(rep.residual < 1e-12);
  CHECK_FALSE(rep.degenerate_pattern);
  REQUIRE(rep.roots.size() == 3);
  CHECK(rep.roots[0] < 0.0);
  CHECK(rep.roots[2] > 1.0);

  SECTION("bisection oracle agrees") {
    const double oracle = bisect_root(0.7, 0.25, 0.5, 0.35, 0.0, 0.7);
    CHECK(std::abs(oracle - *rep.admissible) < 1e-12);
  }

  SECTION("the matching pair zeroes the reaction") {
    const double v = *rep.admissible;
    CHECK(std::abs(reaction(1.0 - v, v, kReference)) < 1e-12);
  }
}

TEST_CASE("zero unbinding rate factors the cubic exactly", "[stationary]") {
  const CubicRootReport rep = solve_stationary_cubic(0.7, 0.25, 0.5, 0.0);
  REQUIRE(rep.roots.size() == 3);
  CHECK(std::abs(rep.roots[0] - (-0.5)) < 1e-12);
  CHECK(std::abs(rep.roots[1] - 0.7) < 1e-12);
  CHECK(std::abs(rep.roots[2] - 1.0) < 1e-12);
  REQUIRE(rep.admissible.has_value());
  CHECK(*rep.admissible == Catch::Approx(0.7).margin(1e-15));
}

TEST_CASE("constant-u stationary pairs", "[stationary]") {
  SECTION("no free particles means no bound ones") {
    const StationaryPair p0 = stationary_for_constant_u(0.0, kReference);
    CHECK(p0.u_const == 0.0);
    CHECK(p0.v_const == 0.0);
  }

  SECTION("negative input is rejected") {
    CHECK_THROWS_AS(stationary_for_constant_u(-0.1, kReference), NegativeInput);
  }

  SECTION("the unit-mass constant recovers the normalized root") {
    const double v_hat = 0.3107435;
    const StationaryPair sp = stationary_for_constant_u(1.0 - v_hat, kReference);
    CHECK(std::abs(sp.v_const - v_hat) < 1e-5);
  }

  SECTION("the returned pair is a reaction zero for any positive constant") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uc(1e-6, 10.0);
    for (int i = 0; i < 500; ++i) {
      const double c = uc(rng);
      const StationaryPair sp = stationary_for_constant_u(c, kReference);
      CHECK(sp.v_const >= 0.0);
      CHECK(sp.v_const < kReference.rho);
      REQUIRE(std::abs(reaction(sp.u_const, sp.v_const, kReference)) < 1e-12);
    }
  }
}

TEST_CASE("exactly one root in (0, rho] across random parameter sets", "[stationary]") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u01(0.05, 0.95);
  for (int i = 0; i < 1000; ++i) {
    Params p;
    p.rho = u01(rng);
    p.a1 = u01(rng);
    p.a0 = p.rho * p.a1 * u01(rng);
    p.epsilon = u01(rng);
    p.sigma = 0.5;
    const CubicRootReport rep = normalized_stationary(p);
    REQUIRE(rep.roots.size() == 3);
    int in_range = 0;
    for (double r : rep.roots) {
      if (r > 0.0 && r <= p.rho * (1.0 + 1e-14)) ++in_range;
    }
    REQUIRE(in_range == 1);
    CHECK(rep.residual < 1e-12);
  }
}

TEST_CASE("unbinding-rate sweep", "[stationary]") {
  SECTION("reference endpoints") {
    const std::vector<double> grid{0.0, 0.35};
    const auto reports = sweep_epsilon(kReference, grid);
    REQUIRE(reports.size() == 2);
    CHECK(*reports[0].admissible == Catch::Approx(0.7).margin(1e-15));
    CHECK(std::abs(*reports[1].admissible - 0.3107435) < 1e-6);
  }

  SECTION("large unbinding rate drives the root to zero") {
    const auto reports = sweep_epsilon(kReference, std::vector<double>{1000.0});
    CHECK(*reports[0].admissible < 1e-3);
    const double oracle = bisect_root(0.7, 0.25, 0.5, 1000.0, 0.0, 0.7);
    CHECK(std::abs(oracle - *reports[0].admissible) < 1e-12);
  }

  SECTION("the admissible root is nonincreasing along an ascending sweep") {
    std::vector<double> grid;
    for (int i = 0; i <= 60; ++i) grid.push_back(2.0 * i / 60.0);
    const auto reports = sweep_epsilon(kReference, grid);
    for (size_t i = 1; i < reports.size(); ++i) {
      REQUIRE(*reports[i].admissible <= *reports[i - 1].admissible + 1e-14);
      CHECK(reports[i].residual < 1e-12);
    }
  }

  SECTION("negative or descending grids are rejected") {
    CHECK_THROWS_AS(sweep_epsilon(kReference, std::vector<double>{-0.1}), NegativeInput);
    CHECK_THROWS(sweep_epsilon(kReference, std::vector<double>{0.5, 0.2}));
  }
}
