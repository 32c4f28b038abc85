#pragma once

#include <stdexcept>
#include <string>

namespace lbopt {

// Error families. These map 1:1 to C API status codes and CLI exit categories.

// Bad configuration: file syntax, invalid values, inconsistent case setup.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure during a run: divergence, non-finite state, rho <= 0.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File IO failure; message carries the path.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Lock-step violation between partition workers (step-number mismatch).
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operation called out of order (e.g. adjoint before any primal solve).
struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lbopt
