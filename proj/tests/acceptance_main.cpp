// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Everything runs on the reference parameter set rho=0.7, sigma=1,
// a0=0.25, a1=0.5, eps=0.35 unless a criterion says otherwise.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "cadsim/cadsim.hpp"

using namespace cadsim;
using clk = std::chrono::steady_clock;

namespace {

const Params kReference{0.7, 1.0, 0.25, 0.5, 0.35};

struct Gate {
  int failed = 0;

  void report(const char* id, bool pass, const std::string& detail) {
    std::printf("%s %s %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failed;
  }
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double seconds_since(clk::time_point t0) {
  return std::chrono::duration<double>(clk::now() - t0).count();
}

}  // namespace

int main() {
  Gate gate;

  // C1: admissible equilibrium root, residual and runtime
  {
    const auto t0 = clk::now();
    const CubicRootReport rep = normalized_stationary(kReference);
    const double wall = seconds_since(t0);
    const double err = std::abs(*rep.admissible - 0.3107435);
    const bool pass = err < 1e-6 && rep.residual < 1e-12 && wall < 1e-3;
    gate.report("C1-stationary-root", pass,
                "admissible=" + format_full(*rep.admissible) + " err=" + num(err) +
                    " residual=" + num(rep.residual) + " wall_s=" + num(wall));
  }

  // C2: root structure in the zero-unbinding limit
  {
    const CubicRootReport rep = solve_stationary_cubic(0.7, 0.25, 0.5, 0.0);
    const double e0 = std::abs(rep.roots[0] + 0.5);
    const double e1 = std::abs(rep.roots[1] - 0.7);
    const double e2 = std::abs(rep.roots[2] - 1.0);
    const bool pass = e0 < 1e-12 && e1 < 1e-12 && e2 < 1e-12 &&
                      std::abs(*rep.admissible - 0.7) < 1e-12;
    gate.report("C2-eps0-roots", pass,
                "roots=" + format_full(rep.roots[0]) + "," + format_full(rep.roots[1]) + "," +
                    format_full(rep.roots[2]));
  }

  // C3 + C4(evolve): the 128^2 convergence experiment
  double evolve_mass_drift = 0.0;
  {
    const auto t0 = clk::now();
    const Grid g(128, 128);
    const double root = *normalized_stationary(kReference).admissible;
    RunConfig cfg{kReference, g, 1e-4, 40.0};
    cfg.stop_rule = StopRule{root, 1e-3};
    cfg.dt_max = 5e-3;
    cfg.dt_growth = 1.05;
    const RunResult rr = run(cfg, sample(g, reference_u0), sample(g, reference_v0));
    const double wall = seconds_since(t0);

    for (double m : rr.series.mass) {
      evolve_mass_drift = std::max(evolve_mass_drift, std::abs(m - rr.series.mass.front()));
    }

    const ConvergenceSeries cs = convergence_study(rr.series, root, 1e-3);
    bool pass = rr.stop_reason == "threshold" && cs.target_reached;
    std::string fits;
    const std::pair<const std::vector<double>*, std::optional<double>> curves[] = {
        {&cs.err_max, cs.cross_max}, {&cs.err_min, cs.cross_min}, {&cs.err_mean, cs.cross_mean}};
    for (const auto& [curve, cross] : curves) {
      const auto [lo, hi] = default_fit_window(cs, cross);
      const RateFit fit = exponential_rate_fit(cs.times, *curve, lo, hi);
      pass = pass && fit.slope < 0.0 && fit.residual_std <= 5e-2;
      fits += (fits.empty() ? "" : ",") + num(fit.residual_std);
    }
    gate.report("C3-convergence-experiment", pass,
                "stop_time=" + num(cs.stop_time.value_or(-1.0)) + " fit_residuals=" + fits +
                    " budget=5e-2 wall_s=" + num(wall) + " (target 300)");
  }

  // C5 + C4(invariant run): box preservation with the closed-form update
  double invariant_mass_drift = 0.0;
  {
    const Grid g(64, 64);
    const DerivedConstants dc = derived_constants(kReference);
    const Field f = sample(g, [&](double x, double y) {
      return dc.u_bound * (x < 0.5 ? 1.0 : x * y);
    });
    const Field gv = sample(g, [&](double x, double y) {
      return 0.999 * dc.v_bound * (y < 0.5 ? 1.0 : (1.0 - x) * y);
    });
    RunConfig cfg{kReference, g, 1e-3, 1.0};
    const RunResult rr = run(cfg, f, gv);
    double min_u = 1e300, max_u = -1e300, min_v = 1e300, max_v = -1e300;
    for (size_t m = 0; m < rr.series.t.size(); ++m) {
      invariant_mass_drift =
          std::max(invariant_mass_drift, std::abs(rr.series.mass[m] - rr.series.mass.front()));
      min_u = std::min(min_u, rr.series.min_u[m]);
      max_u = std::max(max_u, rr.series.max_u[m]);
      min_v = std::min(min_v, rr.series.min_v[m]);
      max_v = std::max(max_v, rr.series.max_v[m]);
    }
    const bool pass = rr.hypothesis_warning.empty() && min_u >= -1e-8 &&
                      max_u <= dc.u_bound + 1e-8 && min_v >= -1e-8 &&
                      max_v <= dc.v_bound + 1e-8;
    gate.report("C5-invariant-region", pass,
                "u=[" + num(min_u) + "," + num(max_u) + "] v=[" + num(min_v) + "," + num(max_v) +
                    "] box=[0," + num(dc.u_bound) + "]x[0," + num(dc.v_bound) + "] slack=1e-8");
  }

  // C6: spatially constant runs against the fourth-order reference
  {
    const Grid g(8, 8);
    const auto [ur, vr] = homogeneous_ode_reference(0.6, 0.4, kReference, 1.0, 1e-5);
    std::vector<double> errs;
    for (double dt : {4e-4, 2e-4, 1e-4}) {
      RunConfig cfg{kReference, g, dt, 1.0};
      const RunResult rr = run(cfg, constant_field(g, 0.6), constant_field(g, 0.4));
      errs.push_back(std::max(std::abs(rr.final_state.u.values[0] - ur),
                              std::abs(rr.final_state.v.values[0] - vr)));
    }
    const double order1 = std::log2(errs[0] / errs[1]);
    const double order2 = std::log2(errs[1] / errs[2]);
    const bool pass = errs[2] < 1e-5 && errs[0] > errs[1] && errs[1] > errs[2] &&
                      order1 >= 0.999 && order2 >= 0.999;
    gate.report("C6-ode-oracle", pass,
                "err_dt1e-4=" + num(errs[2]) + " budget=1e-5 orders=" + num(order1) + "," +
                    num(order2));
  }

  // C7 + C4(picard): desk-scale certificates
  double picard_mass_drift = 0.0;
  {
    const auto t0 = clk::now();
    const Grid g(64, 64);
    RunConfig cfg{kReference, g, 1e-3, 1.0};
    PicardOptions opt;
    opt.tol = 1e-9;  // deep stop so the returned pair itself conserves mass
    opt.n_max = 20;
    const PicardResult res =
        picard_solve(cfg, constant_field(g, 0.6), constant_field(g, 0.4), opt);
    const double wall = seconds_since(t0);

    bool zeros_at_start = true;
    bool under_envelope = true;
    int cross_12 = -1;
    for (const auto& cert : res.certificates) {
      zeros_at_start =
          zeros_at_start && cert.u_norms.front() == 0.0 && cert.v_norms.front() == 0.0;
      under_envelope = under_envelope && cert.within_bound;
      if (cross_12 < 0 && std::max(cert.sup_u, cert.sup_v) < 1e-12) cross_12 = cert.n;
    }
    const double m0 = integrate(res.u.frames.front()) + integrate(res.v.frames.front());
    for (size_t m = 0; m < res.times.size(); ++m) {
      picard_mass_drift = std::max(
          picard_mass_drift,
          std::abs(integrate(res.u.frames[m]) + integrate(res.v.frames[m]) - m0));
    }
    const bool pass = res.converged && zeros_at_start && under_envelope && cross_12 >= 0 &&
                      cross_12 <= 20;
    gate.report("C7-picard-certificates", pass,
                "iterations=" + std::to_string(res.iterations) + " tol12_crossing_n=" +
                    std::to_string(cross_12) + " envelope_slack=1e-2 wall_s=" + num(wall) +
                    " (target 600)");
  }

  // C4: mass conservation across every run above
  {
    const double worst =
        std::max({evolve_mass_drift, invariant_mass_drift, picard_mass_drift});
    gate.report("C4-mass-conservation", worst < 1e-8,
                "drift_128sq=" + num(evolve_mass_drift) + " drift_invariant=" +
                    num(invariant_mass_drift) + " drift_picard=" + num(picard_mass_drift) +
                    " budget=1e-8");
  }

  // C8: discrete operator properties
  {
    std::mt19937_64 rng(414243);
    bool pass = true;
    double worst_cons = 0.0, worst_adj = 0.0;
    {
      const Grid g(96, 64);
      std::uniform_real_distribution<double> amp(-10.0, 10.0);
      for (int rep = 0; rep < 10; ++rep) {
        Field f(g);
        for (double& v : f.values) v = amp(rng);
        worst_cons = std::max(worst_cons, std::abs(integrate(laplacian_neumann(f, 1.0))));
      }
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      for (int rep = 0; rep < 10; ++rep) {
        Field f(g), h(g);
        for (double& v : f.values) v = unit(rng);
        for (double& v : h.values) v = unit(rng);
        worst_adj = std::max(worst_adj, std::abs(inner_product(laplacian_neumann(f, 1.0), h) -
                                                 inner_product(f, laplacian_neumann(h, 1.0))));
      }
      pass = pass && worst_cons < 1e-12 && worst_adj < 1e-12;
    }
    std::vector<double> errs;
    for (int n : {32, 64, 128}) {
      const Grid g(n, n);
      const Field f = sample(g, [](double x, double y) {
        return std::cos(std::numbers::pi * x) * std::cos(std::numbers::pi * y);
      });
      const Field lap = laplacian_neumann(f, 1.0);
      const double lambda = -2.0 * std::numbers::pi * std::numbers::pi;
      double err = 0.0;
      for (size_t c = 0; c < f.values.size(); ++c) {
        err = std::max(err, std::abs(lap.values[c] - lambda * f.values[c]));
      }
      errs.push_back(err);
    }
    const double order1 = std::log2(errs[0] / errs[1]);
    const double order2 = std::log2(errs[1] / errs[2]);
    pass = pass && order1 >= 1.9 && order2 >= 1.9;
    gate.report("C8-operator-properties", pass,
                "conservativity=" + num(worst_cons) + " self_adjoint_gap=" + num(worst_adj) +
                    " orders=" + num(order1) + "," + num(order2));
  }

  // C9: Lipschitz constant against the scan oracle plus random increments
  {
    const DerivedConstants dc = derived_constants(kReference);
    double scanned = 0.0;
    for (int i = 0; i <= 2000; ++i) {
      const double r = dc.u_bound * i / 2000;
      for (int j = 0; j <= 2000; ++j) {
        const double s = dc.v_bound * j / 2000;
        const ReactionPartials d = reaction_jacobian(r, s, kReference);
        scanned = std::max({scanned, std::abs(d.d_free), std::abs(d.d_bound)});
      }
    }
    bool pass = std::abs(scanned - dc.lipschitz) < 1e-6;
    std::mt19937_64 rng(515253);
    std::uniform_real_distribution<double> ur(0.0, dc.u_bound);
    std::uniform_real_distribution<double> us(0.0, dc.v_bound);
    int violations = 0;
    for (int i = 0; i < 100000; ++i) {
      const double r = ur(rng), rp = ur(rng), s = us(rng), sp = us(rng);
      const double dq = std::abs(reaction(r, s, kReference) - reaction(rp, sp, kReference));
      if (dq > dc.lipschitz * (std::abs(r - rp) + std::abs(s - sp)) * (1.0 + 1e-12) + 1e-15) {
        ++violations;
      }
    }
    pass = pass && violations == 0;
    gate.report("C9-lipschitz-certificate", pass,
                "closed_form=" + format_full(dc.lipschitz) + " scan=" + format_full(scanned) +
                    " increment_violations=" + std::to_string(violations) + "/100000");
  }

  std::printf("acceptance: %d criteria failed\n", gate.failed);
  return gate.failed == 0 ? 0 : 1;
}
