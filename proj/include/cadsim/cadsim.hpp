#pragma once

#include "cadsim/diagnostics.hpp"
#include "cadsim/errors.hpp"
#include "cadsim/evolve.hpp"
#include "cadsim/field_io.hpp"
#include "cadsim/grid.hpp"
#include "cadsim/model.hpp"
#include "cadsim/picard.hpp"
#include "cadsim/stationary.hpp"
#include "cadsim/trajectory.hpp"
