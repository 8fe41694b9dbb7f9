#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace dqsim {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A physical parameter is outside its domain (e.g. Γ₁ ≤ 0, m_I ∉ {−1,0,1}).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration: unknown keys, bad types, Nyquist violations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed measurement data (non-uniform sampling, non-positive reference).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Steady-state linear system without a unique solution.
class SingularSystemError : public Error {
 public:
  using Error::Error;
};

/// Integrator asked to take a step larger than the stability/accuracy bound.
class StepSizeError : public Error {
 public:
  StepSizeError(const std::string& what, double required_step)
      : Error(what), required_step_(required_step) {}
  double required_step() const noexcept { return required_step_; }

 private:
  double required_step_;
};

/// Record too short for the requested estimate.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// No dominant spectral peak or response-curve feature where one is required.
class DetectionError : public Error {
 public:
  using Error::Error;
};

/// Least-squares fit failed to converge or is not trustworthy.
class FitError : public Error {
 public:
  using Error::Error;
};

// Non-fatal diagnostics (linearization validity, Γ₁ floor). The default sink
// writes to stderr; tests install their own to capture messages.
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace dqsim
