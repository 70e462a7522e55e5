#pragma once

#include <stdexcept>
#include <string>

namespace linescan {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A type invariant or configuration constraint was violated.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Non-positive or otherwise out-of-domain input to a calculator.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Impossible optical geometry (object behind the light, z = 0, ...).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// A frame could not be measured (no object, peak at the boundary, ...).
class MeasurementError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data (CSV rows, length mismatches).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace linescan
