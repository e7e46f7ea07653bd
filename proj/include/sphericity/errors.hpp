#pragma once

#include <stdexcept>
#include <string>

namespace sphericity {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Spectrum with zero (or numerically zero) eigenvalues where a log is needed.
class DegenerateSpectrumError : public Error {
 public:
  using Error::Error;
};

/// Dimension ratio outside the range a calibration is derived for.
class UnsupportedRegimeError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Eigensolver or factorization failure.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Numerical quadrature or extrapolation did not reach its tolerance.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}

  [[nodiscard]] double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Inconsistent experiment or command configuration.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

}  // namespace sphericity
