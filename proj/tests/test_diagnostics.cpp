#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cadsim/diagnostics.hpp"

using namespace cadsim;

TEST_CASE("midrange observable", "[diagnostics]") {
  const Grid g(16, 16);

  SECTION("constant field") {
    CHECK(midrange(constant_field(g, 0.37)) == 0.37);
  }

  SECTION("depends only on the extremes") {
    Field f(g, 0.5);
    f(0, 0) = 0.0;
    f(7, 7) = 1.0;
    CHECK(midrange(f) == 0.5);
    f(3, 3) = 0.9;  // interior values do not move the midrange
    CHECK(midrange(f) == 0.5);
  }

  SECTION("reference data has exact midrange 0.4 by symmetry") {
    for (int n : {32, 128}) {
      const Grid gg(n, n);
      CHECK(midrange(sample(gg, reference_v0)) == Catch::Approx(0.4).margin(1e-12));
    }
  }

  SECTION("always lies between min and max") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int rep = 0; rep < 20; ++rep) {
      Field f(g);
      for (double& v : f.values) v = u(rng);
      const FieldStats s = field_stats(f);
      const double m = midrange(f);
      REQUIRE(m >= s.min);
      REQUIRE(m <= s.max);
    }
  }

  SECTION("midrange is not the spatial average") {
    Field f(g, 0.0);
    f(0, 0) = 1.0;
    CHECK(midrange(f) == 0.5);
    CHECK(spatial_average(f) == Catch::Approx(1.0 / 256.0).margin(1e-15));
  }
}

TEST_CASE("convergence study bookkeeping", "[diagnostics]") {
  DiagnosticsSeries d;
  const double target = 0.31;
  // synthetic run: exponential approach from both sides
  for (int m = 0; m <= 100; ++m) {
    const double t = 0.1 * m;
    d.t.push_back(t);
    d.max_v.push_back(target + 0.3 * std::exp(-0.5 * t));
    d.min_v.push_back(target - 0.2 * std::exp(-0.5 * t));
    d.v_mid.push_back(0.5 * (d.max_v.back() + d.min_v.back()));
  }

  SECTION("threshold crossing is detected with per-curve times") {
    const ConvergenceSeries cs = convergence_study(d, target, 1e-2);
    REQUIRE(cs.target_reached);
    REQUIRE(cs.stop_time.has_value());
    // err_max = 0.3 e^{-t/2} crosses 1e-2 at t = 2 ln 30 = 6.80
    CHECK(*cs.cross_max == Catch::Approx(6.9).margin(0.11));
    CHECK(*cs.cross_min == Catch::Approx(6.0).margin(0.11));
    CHECK(*cs.stop_time == *cs.cross_max);
  }

  SECTION("unreachable threshold is reported, not fatal") {
    const ConvergenceSeries cs = convergence_study(d, target, 1e-15);
    CHECK_FALSE(cs.target_reached);
    CHECK_FALSE(cs.stop_time.has_value());
  }

  SECTION("stationary data stop at time zero") {
    DiagnosticsSeries flat;
    for (int m = 0; m < 5; ++m) {
      flat.t.push_back(0.01 * m);
      flat.max_v.push_back(target);
      flat.min_v.push_back(target);
      flat.v_mid.push_back(target);
    }
    const ConvergenceSeries cs = convergence_study(flat, target, 1e-3);
    REQUIRE(cs.target_reached);
    CHECK(*cs.stop_time == 0.0);
    CHECK(cs.err_max[0] == 0.0);
  }
}

TEST_CASE("exponential rate fit", "[diagnostics]") {
  SECTION("clean exponential is recovered to roundoff") {
    std::vector<double> t, y;
    for (int i = 0; i < 100; ++i) {
      t.push_back(0.02 * i);
      y.push_back(std::exp(-3.0 * t.back()));
    }
    const RateFit fit = exponential_rate_fit(t, y, 0.0, 2.0);
    CHECK(std::abs(fit.slope + 3.0) < 1e-8);
    CHECK(fit.residual_std < 1e-10);
    CHECK(fit.points == 100);
  }

  SECTION("one-percent noise lands at the expected residual scale") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> t, y;
    for (int i = 0; i < 200; ++i) {
      t.push_back(0.01 * i);
      y.push_back(std::exp(-3.0 * t.back()) * (1.0 + 0.01 * u(rng)));
    }
    const RateFit fit = exponential_rate_fit(t, y, 0.0, 2.0);
    CHECK(fit.residual_std > 1e-3);
    CHECK(fit.residual_std < 5e-2);
  }

  SECTION("slope recovery across the decade of rates") {
    for (double s : {-10.0, -5.0, -1.0, -0.1}) {
      for (double a : {0.3, 2.0}) {
        std::vector<double> t, y;
        for (int i = 0; i < 50; ++i) {
          t.push_back(0.05 * i);
          y.push_back(a * std::exp(s * t.back()));
        }
        const RateFit fit = exponential_rate_fit(t, y, 0.0, 2.5);
        REQUIRE(std::abs(fit.slope - s) <= 1e-6 * std::abs(s));
        CHECK(fit.intercept == Catch::Approx(std::log(a)).margin(1e-9));
      }
    }
  }

  SECTION("nonpositive samples are dropped") {
    std::vector<double> t, y;
    for (int i = 0; i < 30; ++i) {
      t.push_back(0.1 * i);
      y.push_back(i < 15 ? std::exp(-2.0 * t.back()) : 0.0);  // floored tail
    }
    const RateFit fit = exponential_rate_fit(t, y, 0.0, 3.0);
    CHECK(fit.points == 15);
    CHECK(std::abs(fit.slope + 2.0) < 1e-8);
  }

  SECTION("too few samples") {
    std::vector<double> t{0, 1, 2, 3, 4};
    std::vector<double> y{1, 0.5, 0.25, 0.125, 0.0625};
    CHECK_THROWS_AS(exponential_rate_fit(t, y, 0.0, 4.0), InsufficientData);
  }
}
