#pragma once

#include <stdexcept>
#include <string>

namespace mastereq {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible operand shapes (matrix/vector sizes).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid model definition, e.g. a negative propensity.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// A numerical kernel produced or received non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The adaptive controller could not continue (step size underflow etc.).
class SolverAbort : public Error {
 public:
  using Error::Error;
};

}  // namespace mastereq
