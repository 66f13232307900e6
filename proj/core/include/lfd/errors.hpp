#pragma once

#include <stdexcept>
#include <string>

namespace lfd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Point configuration too degenerate for a rigid or projective fit.
class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

/// Covariance matrix could not be factorized even after jitter escalation.
class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

/// DMP start and goal coincide in a dimension that was not flagged.
class DegenerateAmplitudeError : public Error {
 public:
  using Error::Error;
};

/// Not enough samples for the requested estimator.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Input shape does not match what a model expects.
class SizeMismatchError : public Error {
 public:
  using Error::Error;
};

/// A required model was not supplied.
class MissingModelError : public Error {
 public:
  using Error::Error;
};

/// Malformed file or message.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace lfd
