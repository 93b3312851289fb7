#pragma once

// Scalar observables and the convergence-to-equilibrium study: the three
// error curves against the admissible equilibrium value and a least-squares
// estimate of the exponential decay rate.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "cadsim/errors.hpp"
#include "cadsim/evolve.hpp"
#include "cadsim/grid.hpp"

namespace cadsim {

/// Midrange (max + min)/2 of the field values. This is the convergence
/// observable; it is not the spatial average.
inline double midrange(const Field& f) {
  const FieldStats s = field_stats(f);
  return 0.5 * (s.min + s.max);
}

/// Plain mean: integral divided by the domain area (= 1 on the unit square).
inline double spatial_average(const Field& f) { return integrate(f); }

struct ConvergenceSeries {
  std::vector<double> times;
  std::vector<double> err_max;   ///< |target - max v|
  std::vector<double> err_min;   ///< |target - min v|
  std::vector<double> err_mean;  ///< |target - midrange v|
  std::optional<double> stop_time;  ///< first time all three sit under the threshold
  bool target_reached = false;
  // first threshold crossing of each individual curve; bounds its clean
  // exponential stretch (the midrange error changes sign once it reaches
  // the floor set by the asymmetry of the discrete extremes)
  std::optional<double> cross_max, cross_min, cross_mean;
};

/// Error curves of a recorded run against the equilibrium value v_target.
/// A never-crossed threshold is reported (empty stop_time), not fatal.
inline ConvergenceSeries convergence_study(const DiagnosticsSeries& d, double v_target,
                                           double threshold) {
  if (!(threshold > 0.0)) throw Error("threshold must be positive");
  ConvergenceSeries out;
  out.times = d.t;
  const size_t n = d.t.size();
  out.err_max.resize(n);
  out.err_min.resize(n);
  out.err_mean.resize(n);
  for (size_t m = 0; m < n; ++m) {
    out.err_max[m] = std::abs(v_target - d.max_v[m]);
    out.err_min[m] = std::abs(v_target - d.min_v[m]);
    out.err_mean[m] = std::abs(v_target - d.v_mid[m]);
    if (!out.cross_max && out.err_max[m] < threshold) out.cross_max = d.t[m];
    if (!out.cross_min && out.err_min[m] < threshold) out.cross_min = d.t[m];
    if (!out.cross_mean && out.err_mean[m] < threshold) out.cross_mean = d.t[m];
    if (!out.target_reached && out.err_max[m] < threshold && out.err_min[m] < threshold &&
        out.err_mean[m] < threshold) {
      out.target_reached = true;
      out.stop_time = d.t[m];
    }
  }
  return out;
}

/// Default regression window for one error curve: the post-transient,
/// pre-floor stretch [0.2*t_c, t_c] ending at the curve's own threshold
/// crossing (or at the end of the data when it never crossed).
inline std::pair<double, double> default_fit_window(const ConvergenceSeries& s,
                                                    const std::optional<double>& cross) {
  const double t_c = cross.value_or(s.times.empty() ? 0.0 : s.times.back());
  return {0.2 * t_c, t_c};
}

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_std = 0.0;
  int points = 0;
};

/// Least-squares affine fit of log(values) against time on [t_lo, t_hi].
/// Nonpositive samples are dropped (post-floor data); fewer than 10 usable
/// samples raise InsufficientData. residual_std uses n - 2 degrees of
/// freedom.
inline RateFit exponential_rate_fit(std::span<const double> times,
                                    std::span<const double> values, double t_lo,
                                    double t_hi) {
  if (times.size() != values.size()) throw ShapeMismatch("time/value length mismatch");
  std::vector<double> ts, ys;
  for (size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_lo || times[i] > t_hi) continue;
    if (!(values[i] > 0.0)) continue;
    ts.push_back(times[i]);
    ys.push_back(std::log(values[i]));
  }
  const int n = static_cast<int>(ts.size());
  if (n < 10) {
    throw InsufficientData("rate fit needs at least 10 positive samples in the window");
  }
  double st = 0.0, sy = 0.0;
  for (int i = 0; i < n; ++i) {
    st += ts[i];
    sy += ys[i];
  }
  const double mt = st / n;
  const double my = sy / n;
  double stt = 0.0, sty = 0.0;
  for (int i = 0; i < n; ++i) {
    stt += (ts[i] - mt) * (ts[i] - mt);
    sty += (ts[i] - mt) * (ys[i] - my);
  }
  if (!(stt > 0.0)) throw InsufficientData("degenerate time window");
  RateFit fit;
  fit.points = n;
  fit.slope = sty / stt;
  fit.intercept = my - fit.slope * mt;
  double ss_res = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * ts[i]);
    ss_res += r * r;
  }
  fit.residual_std = std::sqrt(ss_res / std::max(1, n - 2));
  return fit;
}

}  // namespace cadsim
