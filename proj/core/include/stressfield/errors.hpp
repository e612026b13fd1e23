#pragma once

#include <stdexcept>
#include <string>

namespace stressfield {

// Base of all library errors; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration or parameters (degenerate perturbation ranges, empty
/// load sets, zero loss weights, ...).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Mesh data that disagrees with the geometry it was built from.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class AssemblyError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

/// Shape or argument contract violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated file.
class FormatError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace stressfield
