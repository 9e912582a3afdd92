#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cyclolms {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Raised by the dense solver when the system matrix is singular or too
/// ill-conditioned for the requested residual.
class SingularMatrixError : public NumericalError {
 public:
  SingularMatrixError(const std::string& what, double reciprocal_condition)
      : NumericalError(what), reciprocal_condition_(reciprocal_condition) {}
  double reciprocal_condition() const { return reciprocal_condition_; }

 private:
  double reciprocal_condition_;
};

/// A quantity that must be real came out with a non-negligible imaginary part.
class ConsistencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Every Monte Carlo trial diverged, so no curve can be formed.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, std::size_t n_trials)
      : NumericalError(what), n_trials_(n_trials) {}
  std::size_t n_trials() const { return n_trials_; }

 private:
  std::size_t n_trials_;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Scenario configuration could not be parsed or validated. `field_path` is a
/// dotted path into the document ("model.texture.nu").
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field_path, const std::string& message)
      : Error(field_path.empty() ? message : field_path + ": " + message),
        field_path_(field_path) {}
  const std::string& field_path() const { return field_path_; }

 private:
  std::string field_path_;
};

}  // namespace cyclolms
