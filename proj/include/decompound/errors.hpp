#pragma once

#include <stdexcept>
#include <string>

namespace decomp {

//! Base class for all library errors. `category()` is a stable
//! machine-parsable token; `what()` carries the human-readable detail.
class Error : public std::runtime_error {
public:
  Error(std::string category, const std::string& message)
    : std::runtime_error(message)
    , category_(std::move(category))
  {}

  const std::string& category() const { return category_; }

private:
  std::string category_;
};

//! The intensity estimator needs at least one exact-zero increment.
//! Raised when n_zero = 0; callers on the estimation path translate this
//! into a zero estimate with valid = false.
class NoZeroIncrements : public Error {
public:
  explicit NoZeroIncrements(const std::string& message)
    : Error("no_zero_increments", message)
  {}
};

//! Consecutive ECF values differ too much for continuous phase tracking,
//! even after the allowed refinement rounds.
class PhaseStepTooLarge : public Error {
public:
  explicit PhaseStepTooLarge(const std::string& message)
    : Error("phase_step_too_large", message)
  {}
};

//! A frequency grid undersamples the operator's spectral support.
class GridTooCoarse : public Error {
public:
  explicit GridTooCoarse(const std::string& message)
    : Error("grid_too_coarse", message)
  {}
};

//! A fit was requested with fewer data points than the fit needs.
class InsufficientPoints : public Error {
public:
  explicit InsufficientPoints(const std::string& message)
    : Error("insufficient_points", message)
  {}
};

//! Invalid or incomplete run configuration; message names the field.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& message)
    : Error("config", message)
  {}
};

//! A file could not be read or written.
class IoError : public Error {
public:
  explicit IoError(const std::string& message)
    : Error("io", message)
  {}
};

} // namespace decomp
