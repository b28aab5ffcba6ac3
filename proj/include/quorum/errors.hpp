#pragma once

#include <stdexcept>
#include <string>

namespace quorum {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invariant violation in a domain type (empty label, '|' in a parameter, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Precondition violation in the stats module (empty ECDF, exact-method cap).
class StatsError : public Error {
 public:
  using Error::Error;
};

// Calibration cannot be built (one side empty or degenerate).
class CalibrationError : public Error {
 public:
  using Error::Error;
};

// File-level failure; message carries path and, where known, line number.
class DatasetError : public Error {
 public:
  using Error::Error;
};

// Transport-level backend failure (connection, timeout, HTTP error).
// classify() converts this into Abstain(BackendError) after retries.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration (backend config, sim config, CLI flags).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace quorum
