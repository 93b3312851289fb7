#pragma once

#include <stdexcept>

namespace cadsim {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NegativeInput : Error {
  using Error::Error;
};

struct NoAdmissibleRoot : Error {
  using Error::Error;
};

struct UnknownBuiltin : Error {
  using Error::Error;
};

struct ShapeMismatch : Error {
  using Error::Error;
};

struct LinearSolveDiverged : Error {
  using Error::Error;
};

struct NonFiniteState : Error {
  using Error::Error;
};

struct HypothesisViolated : Error {
  using Error::Error;
};

struct NoConvergence : Error {
  using Error::Error;
};

struct InsufficientData : Error {
  using Error::Error;
};

}  // namespace cadsim
