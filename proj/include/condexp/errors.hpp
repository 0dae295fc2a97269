#pragma once

#include <stdexcept>
#include <string>

namespace condexp {

// Root of every error the library raises. Callers that only care about
// "something went wrong in condexp" catch this one.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// A GaussianSpec whose covariance is asymmetric, singular or not positive
// definite.
class InvalidSpecError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// The density of a transformed variable is unbounded at the requested point
// (a root where the derivative of the map vanishes).
class DegenerateDensityError : public Error {
 public:
  using Error::Error;
};

// Every likelihood weight is below the representable range: the observation
// lies far outside the prior predictive support.
class VanishingEvidenceError : public Error {
 public:
  VanishingEvidenceError(const std::string& what, double log_denominator)
      : Error(what), log_denominator_(log_denominator) {}

  double log_denominator() const noexcept { return log_denominator_; }

 private:
  double log_denominator_;
};

class UnsupportedPriorError : public Error {
 public:
  using Error::Error;
};

class UnderdeterminedFitError : public Error {
 public:
  using Error::Error;
};

class InvalidTargetError : public Error {
 public:
  using Error::Error;
};

// Malformed problem files, CSV input or unknown builtin names.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace condexp
