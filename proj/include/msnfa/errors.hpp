#pragma once

#include <stdexcept>
#include <string>

namespace msnfa {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A dispersion quantity (conditional variance, covariance pivot) collapsed
// below the point where downstream formulas are meaningful.
class DegenerateDispersion : public Error {
 public:
  using Error::Error;
};

// A matrix that must be positive definite failed its Cholesky factorization.
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

// A moment matrix that must be inverted in a CM update is singular.
class SingularMoment : public Error {
 public:
  using Error::Error;
};

// Conditional-variance or responsibility arithmetic broke down numerically.
class NumericalBreakdown : public Error {
 public:
  using Error::Error;
};

// A mixture component's effective sample size fell below the minimum needed
// to update its parameters.
class EmptyComponent : public Error {
 public:
  using Error::Error;
};

// A hard cluster used for initialization has too few members.
class TinyCluster : public Error {
 public:
  using Error::Error;
};

// Every start of a multi-start fit failed.
class AllStartsFailed : public Error {
 public:
  using Error::Error;
};

// Mismatched or invalid dimensions in user-supplied objects.
class BadDimension : public Error {
 public:
  using Error::Error;
};

// A model object violates one of its structural invariants.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

// CSV cell that cannot be parsed; message names row, column, and token.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A requested column is absent from the file.
class MissingColumn : public Error {
 public:
  using Error::Error;
};

// A column with zero variance cannot be standardized.
class ConstantColumn : public Error {
 public:
  using Error::Error;
};

// A model file does not match the expected schema; message names the field.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace msnfa
