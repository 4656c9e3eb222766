#pragma once

#include <stdexcept>
#include <string>

namespace qh {

/// Base of every error raised by the library. Context (e.g. the FD stencil
/// location that failed) can be appended while the exception propagates
/// without changing its dynamic type.
class Error : public std::exception {
public:
  explicit Error(std::string message) : message_(std::move(message)) {}

  const char* what() const noexcept override { return message_.c_str(); }

  void add_context(const std::string& context) { message_ += " [" + context + "]"; }

  /// Short machine-readable tag used by the CLI.
  virtual const char* kind() const noexcept { return "error"; }

private:
  std::string message_;
};

class NumericalFailure : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "numerical-failure"; }
};

class DivergenceError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "divergence"; }
};

/// Raised by the ODE integrator when the step size underflows or the state
/// blows up. Carries the last parameter that was integrated successfully and
/// an estimate of where the singularity sits.
class SingularityError : public Error {
public:
  SingularityError(std::string message, double last_valid, double estimate)
      : Error(std::move(message)), last_valid_(last_valid), estimate_(estimate) {}

  double last_valid_parameter() const noexcept { return last_valid_; }
  double singularity_estimate() const noexcept { return estimate_; }
  const char* kind() const noexcept override { return "singularity"; }

private:
  double last_valid_;
  double estimate_;
};

class ContourError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "contour"; }
};

class FocalSetError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "focal-set"; }
};

class NoSheetError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "no-sheet"; }
};

class ConfigurationError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "configuration"; }
};

class DomainError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

class PoleError : public DomainError {
public:
  using DomainError::DomainError;
  const char* kind() const noexcept override { return "pole"; }
};

}  // namespace qh
