#pragma once

// Rate model for a two-population surface binding process: a free population
// that diffuses and binds to fixed targets, and a bound population that may
// unbind again. Binding is gregarious: the rate grows with the local bound
// density through the affine factor a0 + a1*v.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cadsim/errors.hpp"

namespace cadsim {

/// Model constants. All dimensionless except sigma (area/time) and the
/// rates a0, a1, epsilon (1/time).
struct Params {
  double rho;      ///< target density, 0 < rho <= 1
  double sigma;    ///< diffusion coefficient of the free population
  double a0;       ///< baseline binding rate
  double a1;       ///< gregarious binding coefficient
  double epsilon;  ///< unbinding rate
};

enum class ValidationMode { strict, lenient };

enum class ParamIssue {
  non_positive_parameter,
  gregarious_condition_violated,  // a0 >= rho*a1
  rho_out_of_range,               // rho > 1
  strict_range_violated,          // a constant >= 1; hard error only in strict mode
};

struct ParamDiagnostic {
  ParamIssue issue;
  std::string message;
};

struct ParamCheck {
  std::vector<ParamDiagnostic> errors;
  std::vector<ParamDiagnostic> warnings;
  bool ok() const { return errors.empty(); }
};

/// Checks positivity, rho <= 1 and the gregarious condition a0 < rho*a1.
/// Strict mode additionally demands every constant < 1; lenient mode turns
/// that into a warning so parameter sets with e.g. sigma = 1 stay usable.
inline ParamCheck validate_params(const Params& p, ValidationMode mode) {
  ParamCheck out;
  const std::pair<const char*, double> named[] = {{"rho", p.rho},
                                                  {"sigma", p.sigma},
                                                  {"a0", p.a0},
                                                  {"a1", p.a1},
                                                  {"epsilon", p.epsilon}};
  for (const auto& [name, value] : named) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      out.errors.push_back({ParamIssue::non_positive_parameter,
                            std::string(name) + " must be positive and finite"});
    }
  }
  if (p.rho > 1.0) {
    out.errors.push_back({ParamIssue::rho_out_of_range, "rho must not exceed 1"});
  }
  if (!(p.a0 < p.rho * p.a1)) {
    out.errors.push_back({ParamIssue::gregarious_condition_violated,
                          "gregarious condition requires a0 < rho*a1"});
  }
  for (const auto& [name, value] : named) {
    if (std::isfinite(value) && value >= 1.0) {
      ParamDiagnostic d{ParamIssue::strict_range_violated,
                        std::string(name) + " = " + std::to_string(value) +
                            " lies outside the nominal open range (0, 1)"};
      if (mode == ValidationMode::strict) {
        out.errors.push_back(std::move(d));
      } else {
        out.warnings.push_back(std::move(d));
      }
    }
  }
  return out;
}

/// Net binding rate: gain (rho - s)(a0 + a1 s) r minus unbinding loss
/// epsilon*s. Pure formula; callers keep (r, s) inside the invariant box.
inline double reaction(double r, double s, const Params& p) {
  return (p.rho - s) * (p.a0 + p.a1 * s) * r - p.epsilon * s;
}

struct ReactionPartials {
  double d_free;   ///< derivative in the free density r
  double d_bound;  ///< derivative in the bound density s
};

inline ReactionPartials reaction_jacobian(double r, double s, const Params& p) {
  return {(p.rho - s) * (p.a0 + p.a1 * s),
          (p.a1 * p.rho - p.a0 - 2.0 * p.a1 * s) * r - p.epsilon};
}

/// Lipschitz bound of the reaction on [0, u_bound] x [0, v_bound] for the
/// 1-norm increment |dr| + |ds|, i.e. the max of both partials over the box.
///
/// d_free is independent of r and quadratic in s, so its extremum sits at an
/// endpoint of [0, v_bound] or at the vertex of that quadratic; d_bound is
/// affine in each argument, so corners suffice. Clamped below at 1 so the
/// factorial envelope of the iteration certificates is evaluable as printed.
inline double lipschitz_constant(const Params& p, double u_bound, double v_bound) {
  double worst = 0.0;
  auto consider = [&](double r, double s) {
    const ReactionPartials d = reaction_jacobian(r, s, p);
    worst = std::max({worst, std::abs(d.d_free), std::abs(d.d_bound)});
  };
  const double s_vertex = (p.a1 * p.rho - p.a0) / (2.0 * p.a1);
  for (double r : {0.0, u_bound}) {
    consider(r, 0.0);
    consider(r, v_bound);
    if (s_vertex > 0.0 && s_vertex < v_bound) consider(r, s_vertex);
  }
  return std::max(1.0, worst);
}

/// Constants derived from a valid parameter set. u_bound and v_bound span
/// the invariant box of the dynamics (u_bound = epsilon/(a1*rho - a0),
/// v_bound = sqrt(rho*a0/a1)); bound_prefactor = 4*max(u_bound, v_bound)^2
/// times the domain area enters the iteration-error envelope.
struct DerivedConstants {
  double u_bound;
  double v_bound;
  double lipschitz;
  double bound_prefactor;
};

inline DerivedConstants derived_constants(const Params& p, double domain_area = 1.0) {
  const double gap = p.a1 * p.rho - p.a0;
  const double u_bound = p.epsilon / gap;
  const double v_bound = std::sqrt(p.rho * p.a0 / p.a1);
  const double m = std::max(u_bound, v_bound);
  return {u_bound, v_bound, lipschitz_constant(p, u_bound, v_bound),
          4.0 * m * m * domain_area};
}

}  // namespace cadsim
