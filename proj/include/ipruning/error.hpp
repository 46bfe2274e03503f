#pragma once

#include <stdexcept>
#include <string>

namespace ipruning {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor shape / axis incompatibilities.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid values passed to an operation (out-of-range label, bad mask length, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration (population too small, batch size larger than dataset, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Bad command-line usage; maps to exit code 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure (non-PD covariance, divergent loss).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Pruning would leave the network structurally invalid.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Internal bookkeeping violation (stale energies, tape misuse).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace ipruning
