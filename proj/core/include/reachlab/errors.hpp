#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace reachlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (bad token id, n = 0, p outside [0,1], ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// P(outcome | prefix) is 1, so the outcome-excluded distribution does not exist.
class DegenerateHazard : public Error {
 public:
  using Error::Error;
};

/// An estimator was handed a trajectory sampled in the wrong mode.
class ModeMismatch : public Error {
 public:
  using Error::Error;
};

/// Exhaustive enumeration would exceed the configured leaf budget.
class InstanceTooLarge : public Error {
 public:
  using Error::Error;
};

/// A metric is undefined for the input (e.g. AUROC with a single class).
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

/// A file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

struct Violation {
  enum class Kind { shape, row_sum, range, index };
  Kind kind;
  int row = -1;  // -1 when the violation is not tied to a row
  int col = -1;
  std::string message;
};

/// Raised when a model fails validation; carries every violation found.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// A chain could not be calibrated to the requested outcome probability.
class CalibrationFailure : public Error {
 public:
  CalibrationFailure(double target, double achievable_low, double achievable_high);
  double target() const noexcept { return target_; }
  double achievable_low() const noexcept { return low_; }
  double achievable_high() const noexcept { return high_; }

 private:
  double target_;
  double low_;
  double high_;
};

}  // namespace reachlab
