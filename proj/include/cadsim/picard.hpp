#pragma once

// Successive approximation over the full space-time cylinder. Starting from
// the constant-in-time pair (f, g), each sweep solves
//
//   u-sweep: a linear parabolic problem for the next free density, with the
//            binding coefficient and unbinding source frozen on the previous
//            bound-density trajectory;
//   v-sweep: a pointwise-in-space scalar ODE for the next bound density,
//            with the previous free-density trajectory frozen.
//
// Both sub-solves share the grid and the step sequence across sweeps, so the
// squared L2 increments between consecutive iterates are well defined with
// no interpolation. Those increments, together with the factorial envelope
//   prefactor * k^(n+1) * exp(3*k*T*n) * t^n / n!,
// form per-iteration certificates of the contraction.
//
// The v-sweep uses the backward-Euler form of the pointwise quadratic: at a
// fixed point of the sweep map, the amount the v-equation gains per step
// then equals bit-for-bit the amount the u-equation removes, so the
// converged pair conserves total mass to linear-solver tolerance.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "cadsim/errors.hpp"
#include "cadsim/evolve.hpp"
#include "cadsim/grid.hpp"
#include "cadsim/model.hpp"
#include "cadsim/trajectory.hpp"

namespace cadsim {

/// Envelope for the squared increment norms after n sweeps, evaluated in log
/// space; returns +inf when the value exceeds double range (the envelope
/// grows steeply before the factorial takes over).
inline double cauchy_bound(int n, double t, const DerivedConstants& c, double t_end) {
  if (n == 0) return c.bound_prefactor * c.lipschitz;
  if (!(t > 0.0)) return 0.0;
  const double k = c.lipschitz;
  const double log_b = std::log(c.bound_prefactor) + (n + 1) * std::log(k) +
                       3.0 * k * t_end * n + n * std::log(t) - std::lgamma(n + 1.0);
  if (log_b > 709.0) return std::numeric_limits<double>::infinity();
  return std::exp(log_b);
}

/// Per-time squared L2 distance between two aligned trajectories.
inline std::vector<double> cauchy_norms(const Trajectory& a, const Trajectory& b) {
  if (a.grid != b.grid || a.times != b.times) {
    throw ShapeMismatch("trajectories must share grid and times");
  }
  std::vector<double> out(a.times.size());
  const double cell = a.grid.hx * a.grid.hy;
  for (size_t m = 0; m < a.times.size(); ++m) {
    detail::CompensatedSum acc;
    const auto& x = a.frames[m].values;
    const auto& y = b.frames[m].values;
    for (size_t c = 0; c < x.size(); ++c) {
      const double d = x[c] - y[c];
      acc.add(d * d);
    }
    out[m] = acc.value() * cell;
  }
  return out;
}

struct PicardCertificate {
  int n = 0;                     ///< compares iterate n+1 against iterate n
  std::vector<double> times;
  std::vector<double> u_norms;   ///< squared L2 increments of the free density
  std::vector<double> v_norms;   ///< squared L2 increments of the bound density
  std::vector<double> bound;     ///< envelope at the same times
  double sup_u = 0.0;
  double sup_v = 0.0;
  double sup_bound = 0.0;
  bool within_bound = true;      ///< increments under (1 + slack) * envelope everywhere
};

struct PicardOptions {
  int n_max = 20;
  double tol = 1e-6;             ///< stop when sup_t of both norms < tol^2
  int certificate_stride = 1;    ///< store every stride-th step in certificates
  double bound_slack = 1e-2;
};

struct IterateRange {
  double min_u, max_u, min_v, max_v;
};

struct PicardResult {
  Trajectory u;
  Trajectory v;
  std::vector<PicardCertificate> certificates;
  std::vector<IterateRange> iterate_ranges;  ///< per sweep, over all frames
  bool converged = false;
  int iterations = 0;
  DerivedConstants consts{};
  std::vector<double> times;

  explicit PicardResult(const Grid& g) : u(g), v(g) {}
};

/// Runs the sweeps until sup_t max(U_n, V_n) < tol^2 or n_max is reached.
/// Initial data must satisfy the box hypothesis: 0 <= f <= u_bound and
/// 0 <= g < v_bound everywhere (this module enforces it; the coupled run
/// only warns). Throws NoConvergence only if the cap is hit while the
/// increment suprema have stopped decreasing.
inline PicardResult picard_solve(const RunConfig& cfg, const Field& f, const Field& g,
                                 const PicardOptions& opt = {}) {
  if (f.grid != cfg.grid || g.grid != cfg.grid) {
    throw ShapeMismatch("initial data must live on the configured grid");
  }
  const Params& p = cfg.params;
  const DerivedConstants dc = derived_constants(p);
  {
    const FieldStats sf = field_stats(f);
    const FieldStats sg = field_stats(g);
    if (!sf.finite || !sg.finite) throw NonFiniteState("non-finite initial data");
    if (sf.min < 0.0 || sf.max > dc.u_bound) {
      throw HypothesisViolated("initial free density must lie in [0, u_bound]");
    }
    if (sg.min < 0.0 || sg.max >= dc.v_bound) {
      throw HypothesisViolated("initial bound density must lie in [0, v_bound)");
    }
  }

  const long steps = std::max(1L, std::lround(std::ceil(cfg.t_end / cfg.dt - 1e-9)));
  const double dt = cfg.t_end / static_cast<double>(steps);
  const size_t n_cells = static_cast<size_t>(cfg.grid.cells());
  const size_t n_frames = static_cast<size_t>(steps) + 1;

  std::vector<double> times(n_frames);
  for (size_t m = 0; m < n_frames; ++m) times[m] = static_cast<double>(m) * dt;

  using Frames = std::vector<std::vector<double>>;
  Frames u_prev(n_frames, f.values), v_prev(n_frames, g.values);
  Frames u_next(n_frames), v_next(n_frames);

  ImplicitFreeDensitySolver usolve(cfg.grid, p, cfg.cg_tol, cfg.cg_max_iter);
  const double cell = cfg.grid.hx * cfg.grid.hy;
  auto sq_l2 = [&](const std::vector<double>& a, const std::vector<double>& b) {
    detail::CompensatedSum acc;
    for (size_t c = 0; c < a.size(); ++c) {
      const double d = a[c] - b[c];
      acc.add(d * d);
    }
    return acc.value() * cell;
  };

  PicardResult result(cfg.grid);
  result.consts = dc;
  result.times = times;

  double prev_sup = std::numeric_limits<double>::infinity();
  const double tol_sq = opt.tol * opt.tol;
  const int stride = std::max(1, opt.certificate_stride);

  for (int n = 0; n < opt.n_max; ++n) {
    // u-sweep against the previous bound-density trajectory
    u_next[0] = f.values;
    for (size_t m = 0; m + 1 < n_frames; ++m) {
      usolve.solve(dt, u_next[m], v_prev[m + 1], u_next[m + 1]);
    }
    // v-sweep against the previous free-density trajectory
    v_next[0] = g.values;
    for (size_t m = 0; m + 1 < n_frames; ++m) {
      const auto& u_frozen = u_prev[m + 1];
      const auto& v_from = v_next[m];
      auto& v_to = v_next[m + 1];
      v_to.resize(n_cells);
      for (size_t c = 0; c < n_cells; ++c) {
        v_to[c] = reaction_backward_euler_step(v_from[c], u_frozen[c], p, dt);
      }
    }

    PicardCertificate cert;
    cert.n = n;
    for (size_t m = 0; m < n_frames; m += stride) {
      const double un = sq_l2(u_next[m], u_prev[m]);
      const double vn = sq_l2(v_next[m], v_prev[m]);
      const double bn = cauchy_bound(n, times[m], dc, cfg.t_end);
      cert.times.push_back(times[m]);
      cert.u_norms.push_back(un);
      cert.v_norms.push_back(vn);
      cert.bound.push_back(bn);
      cert.sup_u = std::max(cert.sup_u, un);
      cert.sup_v = std::max(cert.sup_v, vn);
      cert.sup_bound = std::max(cert.sup_bound, bn);
      if (un > (1.0 + opt.bound_slack) * bn || vn > (1.0 + opt.bound_slack) * bn) {
        cert.within_bound = false;
      }
    }

    IterateRange range{std::numeric_limits<double>::infinity(),
                       -std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::infinity(),
                       -std::numeric_limits<double>::infinity()};
    for (size_t m = 0; m < n_frames; ++m) {
      for (double x : u_next[m]) {
        range.min_u = std::min(range.min_u, x);
        range.max_u = std::max(range.max_u, x);
      }
      for (double x : v_next[m]) {
        range.min_v = std::min(range.min_v, x);
        range.max_v = std::max(range.max_v, x);
      }
    }
    result.iterate_ranges.push_back(range);

    const double sup = std::max(cert.sup_u, cert.sup_v);
    result.certificates.push_back(std::move(cert));
    std::swap(u_prev, u_next);
    std::swap(v_prev, v_next);
    result.iterations = n + 1;

    if (sup < tol_sq) {
      result.converged = true;
      break;
    }
    if (n + 1 == opt.n_max && sup >= prev_sup) {
      throw NoConvergence("iteration cap reached with non-decreasing increments");
    }
    prev_sup = sup;
  }

  for (size_t m = 0; m < n_frames; ++m) {
    Field fu(cfg.grid), fv(cfg.grid);
    fu.values = std::move(u_prev[m]);
    fv.values = std::move(v_prev[m]);
    result.u.push(times[m], std::move(fu));
    result.v.push(times[m], std::move(fv));
  }
  return result;
}

}  // namespace cadsim
