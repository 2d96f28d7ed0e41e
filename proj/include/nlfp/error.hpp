#pragma once

#include <stdexcept>
#include <string>

namespace nlfp {

// Base of every error raised by the library. The CLI maps the subclasses
// onto exit codes (ConfigError -> 2, everything else -> 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument value: non-finite input, zero mass, mismatched meshes.
class DomainError : public Error {
 public:
  using Error::Error;
};

// The computational box is too small: mass leaked into the boundary layer.
class DomainTooSmallError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Bad configuration: unknown preset, CFL violation, malformed scenario.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Numerical failure while solving (Newton divergence, non-finite particle).
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace nlfp
