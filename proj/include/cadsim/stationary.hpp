#pragma once

// Stationary states. With no-flux boundaries the free density of any
// equilibrium is a constant C, and the bound density solves a quadratic in
// v with exactly one admissible (nonnegative) branch. Under the unit-mass
// normalization u + v = 1 that quadratic collapses to a cubic in v whose
// unique root in (0, rho] is the physically admissible equilibrium.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "cadsim/errors.hpp"
#include "cadsim/model.hpp"

namespace cadsim {

struct StationaryPair {
  double u_const;
  double v_const;
};

/// Bound density paired with a constant free density C >= 0. The lower
/// branch of the quadratic is always negative and is rejected.
inline StationaryPair stationary_for_constant_u(double c, const Params& p) {
  if (!(c >= 0.0)) throw NegativeInput("constant free density must be nonnegative");
  if (c == 0.0) return {0.0, 0.0};
  const double b = c * (p.a1 * p.rho - p.a0) - p.epsilon;
  const double disc = b * b + 4.0 * c * c * p.rho * p.a0 * p.a1;
  const double sq = std::sqrt(disc);
  // cancellation-free upper root
  const double v = (b >= 0.0) ? (b + sq) / (2.0 * c * p.a1)
                              : 2.0 * c * p.rho * p.a0 / (sq - b);
  return {c, v};
}

struct CubicRootReport {
  std::vector<double> roots;          ///< all real roots, ascending
  std::optional<double> admissible;   ///< the unique root in (0, rho]
  double residual = 0.0;              ///< |cubic| at the admissible root
  bool degenerate_pattern = false;    ///< more than one root in (0, rho]; smallest kept
};

namespace detail {

inline double stationary_cubic(double v, double rho, double a0, double a1, double eps) {
  return (rho - v) * (a0 + a1 * v) * (1.0 - v) - eps * v;
}

inline double stationary_cubic_deriv(double v, double rho, double a0, double a1, double eps) {
  const double f1 = rho - v;
  const double f2 = a0 + a1 * v;
  const double f3 = 1.0 - v;
  return -f2 * f3 + a1 * f1 * f3 - f1 * f2 - eps;
}

// Newton iteration that never leaves a sign-change bracket; bisects whenever
// the Newton candidate escapes or stalls. Exact zeros at the endpoints are
// returned as-is so degenerate limits (eps = 0) come out bit-exact.
template <class F, class DF>
double bracketed_root(F&& f, DF&& df, double lo, double hi, double tol) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw Error("root bracket does not change sign");
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if ((fx > 0.0) == (flo > 0.0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
    const double d = df(x);
    double next = (d != 0.0) ? x - fx / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double width = hi - lo;
    if (width <= tol + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x)) {
      return next;
    }
    x = next;
  }
  return x;
}

}  // namespace detail

/// All three real roots of the normalized equilibrium cubic
///   (rho - v)(a0 + a1 v)(1 - v) - eps*v = 0
/// for eps >= 0 (eps = 0 is the deformation limit with roots
/// {-a0/a1, rho, 1}). The sign pattern of the cubic pins one root in
/// (0, rho], one at or below -a0/a1 and one at or above 1.
inline CubicRootReport solve_stationary_cubic(double rho, double a0, double a1,
                                              double eps, double tol = 0.0) {
  if (!(rho > 0.0) || !(a0 > 0.0) || !(a1 > 0.0) || !(eps >= 0.0)) {
    throw Error("stationary cubic needs rho, a0, a1 > 0 and eps >= 0");
  }
  auto f = [&](double v) { return detail::stationary_cubic(v, rho, a0, a1, eps); };
  auto df = [&](double v) { return detail::stationary_cubic_deriv(v, rho, a0, a1, eps); };

  const double r_mid = detail::bracketed_root(f, df, 0.0, rho, tol);

  double left = -a0 / a1;
  double r_low = left;
  if (f(left) != 0.0) {
    double span = 1.0;
    while (f(left - span) > 0.0) {
      span *= 2.0;
      if (span > 1e12) throw Error("no sign change left of -a0/a1");
    }
    r_low = detail::bracketed_root(f, df, left - span, left, tol);
  }

  double r_high = 1.0;
  if (f(1.0) != 0.0) {
    double span = 1.0;
    while (f(1.0 + span) < 0.0) {
      span *= 2.0;
      if (span > 1e12) throw Error("no sign change right of 1");
    }
    r_high = detail::bracketed_root(f, df, 1.0, 1.0 + span, tol);
  }

  CubicRootReport report;
  report.roots = {r_low, r_mid, r_high};
  std::sort(report.roots.begin(), report.roots.end());

  std::vector<double> in_range;
  for (double r : report.roots) {
    if (r > 0.0 && r <= rho * (1.0 + 1e-14)) in_range.push_back(std::min(r, rho));
  }
  if (in_range.empty()) throw NoAdmissibleRoot("no equilibrium root in (0, rho]");
  report.degenerate_pattern = in_range.size() > 1;
  report.admissible = in_range.front();
  report.residual = std::abs(f(*report.admissible));
  return report;
}

inline CubicRootReport normalized_stationary(const Params& p, double tol = 0.0) {
  return solve_stationary_cubic(p.rho, p.a0, p.a1, p.epsilon, tol);
}

/// Root trajectories along an ascending unbinding-rate sweep. eps = 0 is
/// accepted as the deformation limit.
inline std::vector<CubicRootReport> sweep_epsilon(const Params& p,
                                                  std::span<const double> eps_grid) {
  std::vector<CubicRootReport> out;
  out.reserve(eps_grid.size());
  double prev = -1.0;
  for (double eps : eps_grid) {
    if (!(eps >= 0.0)) throw NegativeInput("epsilon sweep values must be nonnegative");
    if (eps < prev) throw Error("epsilon sweep must be ascending");
    prev = eps;
    out.push_back(solve_stationary_cubic(p.rho, p.a0, p.a1, eps));
  }
  return out;
}

}  // namespace cadsim
