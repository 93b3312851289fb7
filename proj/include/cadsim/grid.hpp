#pragma once

// Uniform cell-centered grid on the unit square, scalar fields, midpoint
// quadrature and the five-point Laplacian with mirror ghost cells. Mirror
// ghosts make the homogeneous no-flux boundary exactly conservative: the
// discrete integral of the Laplacian telescopes to zero.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cadsim/errors.hpp"

namespace cadsim {

struct Grid {
  int nx;
  int ny;
  double hx;
  double hy;

  Grid(int nx_, int ny_) : nx(nx_), ny(ny_), hx(1.0 / nx_), hy(1.0 / ny_) {
    if (nx_ < 3 || ny_ < 3) {
      throw std::invalid_argument("grid needs at least 3 cells per axis");
    }
  }

  int cells() const { return nx * ny; }
  double x_center(int i) const { return (i + 0.5) * hx; }
  double y_center(int j) const { return (j + 0.5) * hy; }
  bool operator==(const Grid&) const = default;
};

/// Cell-centered scalar samples, row-major in y.
struct Field {
  Grid grid;
  std::vector<double> values;

  explicit Field(const Grid& g, double fill = 0.0) : grid(g), values(g.cells(), fill) {}

  double& operator()(int i, int j) { return values[static_cast<size_t>(j) * grid.nx + i]; }
  double operator()(int i, int j) const { return values[static_cast<size_t>(j) * grid.nx + i]; }
};

template <class F>
Field sample(const Grid& g, F&& f) {
  Field out(g);
  for (int j = 0; j < g.ny; ++j) {
    const double y = g.y_center(j);
    for (int i = 0; i < g.nx; ++i) {
      out(i, j) = f(g.x_center(i), y);
    }
  }
  return out;
}

/// Reference initial bound density: a sinusoidal perturbation of amplitude
/// 0.2 about the mean 0.4, three half-periods per axis.
inline double reference_v0(double x, double y) {
  return 0.4 + 0.2 * std::sin(3.0 * std::numbers::pi * x) * std::cos(3.0 * std::numbers::pi * y);
}

/// Matching free density so the total starts with unit mass.
inline double reference_u0(double x, double y) { return 1.0 - reference_v0(x, y); }

inline Field constant_field(const Grid& g, double c) { return Field(g, c); }

/// Builtin initial data by name: "reference-v0", "reference-u0" or
/// "constant:<value>".
inline Field sample_initial(std::string_view which, const Grid& g) {
  if (which == "reference-v0") return sample(g, reference_v0);
  if (which == "reference-u0") return sample(g, reference_u0);
  constexpr std::string_view kConst = "constant:";
  if (which.substr(0, kConst.size()) == kConst) {
    const std::string num(which.substr(kConst.size()));
    size_t used = 0;
    double c = 0.0;
    try {
      c = std::stod(num, &used);
    } catch (const std::exception&) {
      throw UnknownBuiltin("bad constant initial value: " + num);
    }
    if (used != num.size()) throw UnknownBuiltin("bad constant initial value: " + num);
    return constant_field(g, c);
  }
  throw UnknownBuiltin("unknown initial data builtin: " + std::string(which));
}

namespace detail {

// Neumaier-compensated accumulation; keeps quadrature and norm checks at
// machine precision even on large grids.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      carry += (sum - t) + x;
    } else {
      carry += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + carry; }
};

}  // namespace detail

/// Midpoint quadrature over the unit square: hx*hy * sum of samples.
inline double integrate(const Field& f) {
  detail::CompensatedSum acc;
  for (double v : f.values) acc.add(v);
  return acc.value() * f.grid.hx * f.grid.hy;
}

/// Midpoint inner product <f, g> = hx*hy * sum f*g.
inline double inner_product(const Field& a, const Field& b) {
  if (a.grid != b.grid) throw ShapeMismatch("inner product needs matching grids");
  detail::CompensatedSum acc;
  for (size_t c = 0; c < a.values.size(); ++c) acc.add(a.values[c] * b.values[c]);
  return acc.value() * a.grid.hx * a.grid.hy;
}

struct FieldStats {
  double min;
  double max;
  bool finite;
};

inline FieldStats field_stats(const Field& f) {
  FieldStats s{std::numeric_limits<double>::infinity(),
               -std::numeric_limits<double>::infinity(), true};
  for (double v : f.values) {
    if (!std::isfinite(v)) s.finite = false;
    if (v < s.min) s.min = v;
    if (v > s.max) s.max = v;
  }
  return s;
}

/// Raw five-point Laplacian with mirror ghosts; out must not alias in.
inline void laplacian_apply(const Grid& g, const double* in, double* out) {
  const int nx = g.nx;
  const int ny = g.ny;
  const double ix2 = 1.0 / (g.hx * g.hx);
  const double iy2 = 1.0 / (g.hy * g.hy);
  for (int j = 0; j < ny; ++j) {
    const int jm = (j > 0) ? j - 1 : 0;          // mirror == clamp for the first ghost
    const int jp = (j < ny - 1) ? j + 1 : ny - 1;
    const double* row = in + static_cast<size_t>(j) * nx;
    const double* rm = in + static_cast<size_t>(jm) * nx;
    const double* rp = in + static_cast<size_t>(jp) * nx;
    double* o = out + static_cast<size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) {
      const int im = (i > 0) ? i - 1 : 0;
      const int ip = (i < nx - 1) ? i + 1 : nx - 1;
      o[i] = (row[im] + row[ip] - 2.0 * row[i]) * ix2 + (rm[i] + rp[i] - 2.0 * row[i]) * iy2;
    }
  }
}

/// sigma times the discrete no-flux Laplacian.
inline Field laplacian_neumann(const Field& f, double sigma) {
  Field out(f.grid);
  laplacian_apply(f.grid, f.values.data(), out.values.data());
  for (double& v : out.values) v *= sigma;
  return out;
}

}  // namespace cadsim
