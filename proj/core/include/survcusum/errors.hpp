#pragma once

#include <stdexcept>
#include <string>

namespace survcusum {

// Base of all library errors. CLI maps ConfigError to exit code 2 and
// NumericError to exit code 3.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Invalid input: bad parameters, malformed files, schema violations.
class ConfigError : public Error {
  public:
    using Error::Error;
};

// A computation that could not produce a result: degenerate data,
// non-convergence, roots outside the search window.
class NumericError : public Error {
  public:
    using Error::Error;
};

// MLE of the log hazard ratio is undefined: failures observed with zero
// cumulative intensity and no cap supplied.
class UndefinedMleError : public NumericError {
  public:
    using NumericError::NumericError;
};

// Run-length equation has no root below the search horizon.
class HorizonExceededError : public NumericError {
  public:
    using NumericError::NumericError;
};

// Requested approximation does not exist (run-length theory needs theta > 0).
class NoApproximationError : public NumericError {
  public:
    using NumericError::NumericError;
};

// Iterative fit did not reach the gradient tolerance.
class ConvergenceError : public NumericError {
  public:
    using NumericError::NumericError;
};

// Information matrix is singular to machine precision (collinear covariates).
class SingularInformationError : public NumericError {
  public:
    using NumericError::NumericError;
};

// A per-subject failure probability of exactly 0 or 1 breaks the
// likelihood-ratio weights.
class DegenerateProbabilityError : public NumericError {
  public:
    using NumericError::NumericError;
};

// Too few replicates to estimate the requested quantile.
class InsufficientReplicatesError : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

}  // namespace survcusum
