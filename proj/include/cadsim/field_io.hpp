#pragma once

// Field serialization: full-precision CSV (one line per grid row, header
// comment with the grid shape and time) and 8-bit grayscale PGM for quick
// looks, with the affine value range recorded in a text sidecar.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>

#include "cadsim/errors.hpp"
#include "cadsim/grid.hpp"

namespace cadsim {

/// Shortest decimal string that round-trips a double (17 significant digits).
inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_field_csv(const Field& f, double time, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << "# nx=" << f.grid.nx << " ny=" << f.grid.ny << " t=" << format_full(time) << "\n";
  for (int j = 0; j < f.grid.ny; ++j) {
    for (int i = 0; i < f.grid.nx; ++i) {
      if (i) os << ',';
      os << format_full(f(i, j));
    }
    os << '\n';
  }
  if (!os) throw Error("write failed: " + path.string());
}

inline std::pair<Field, double> read_field_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  std::string header;
  std::getline(is, header);
  int nx = 0, ny = 0;
  double time = 0.0;
  if (std::sscanf(header.c_str(), "# nx=%d ny=%d t=%lf", &nx, &ny, &time) != 3) {
    throw Error("bad field header in " + path.string());
  }
  Field f{Grid(nx, ny)};
  std::string line;
  for (int j = 0; j < ny; ++j) {
    if (!std::getline(is, line)) throw Error("truncated field file " + path.string());
    std::istringstream row(line);
    std::string cell;
    for (int i = 0; i < nx; ++i) {
      if (!std::getline(row, cell, ',')) throw Error("short row in " + path.string());
      f(i, j) = std::stod(cell);
    }
  }
  return {std::move(f), time};
}

/// Binary PGM with values mapped affinely from [lo, hi] to 0..255 (clamped);
/// rows are written top-down (largest y first). The mapping range and grid
/// metadata go to "<path>.txt".
inline void write_field_pgm(const Field& f, double lo, double hi, double time,
                            const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << "P5\n" << f.grid.nx << ' ' << f.grid.ny << "\n255\n";
  const double span = hi - lo;
  for (int j = f.grid.ny - 1; j >= 0; --j) {
    for (int i = 0; i < f.grid.nx; ++i) {
      double t = span != 0.0 ? (f(i, j) - lo) / span : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(t * 255.0))));
    }
  }
  if (!os) throw Error("write failed: " + path.string());

  std::ofstream meta(path.string() + ".txt");
  meta << "nx=" << f.grid.nx << "\nny=" << f.grid.ny << "\nt=" << format_full(time)
       << "\nmin=" << format_full(lo) << "\nmax=" << format_full(hi)
       << "\nrow_order=top-to-bottom (y descending)\n";
}

}  // namespace cadsim
