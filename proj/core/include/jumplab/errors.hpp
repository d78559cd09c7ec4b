#pragma once

#include <stdexcept>
#include <string>

namespace jumplab {

// Base class for every error raised by the library. The CLI maps the
// concrete subclasses onto its exit-code vocabulary.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A configured cap (points, nodes, entries, memory) would be exceeded.
class ResourceLimit : public Error {
 public:
  using Error::Error;
};

// Quadrature or solver failed to reach its tolerance.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Missing or inconsistent configuration (e.g. no kappa1 for a tail bound).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller broke a documented contract (negative kernel sample, unbounded f).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// The chain sits in a state with zero total rate.
class AbsorbingState : public Error {
 public:
  using Error::Error;
};

// Query outside the region where a function is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace jumplab
