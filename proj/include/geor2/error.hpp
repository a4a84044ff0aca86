#pragma once

#include <stdexcept>
#include <string>

namespace geor2 {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument lies outside the mean domain / parameter space.
class DomainError : public Error {
 public:
  using Error::Error;
};

// An iterative method (IRLS, Newton, quadrature, optimizer) did not converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// A covariance or Hessian could not be factorized.
class IllConditionedError : public Error {
 public:
  using Error::Error;
};

// R-squared has a zero denominator (all observations identical).
class UndefinedR2Error : public Error {
 public:
  using Error::Error;
};

// MCMC diagnostics outside their admissible range.
class SamplerError : public Error {
 public:
  using Error::Error;
};

// Malformed input: CSV schema violations, bad artifacts, bad options.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace geor2
