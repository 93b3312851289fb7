#pragma once

#include <vector>

#include "cadsim/grid.hpp"

namespace cadsim {

/// Time-indexed sequence of scalar fields on one grid.
struct Trajectory {
  Grid grid;
  std::vector<double> times;
  std::vector<Field> frames;

  explicit Trajectory(const Grid& g) : grid(g) {}

  void push(double t, Field f) {
    times.push_back(t);
    frames.push_back(std::move(f));
  }
};

}  // namespace cadsim
