#pragma once

// Special functions shared by every calibration: the standard normal
// CDF/quantile and the chi-square CDF.

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "sphericity/errors.hpp"

namespace sphericity {

/// A value in [0, 1]. Used for significance levels and p-values.
class Probability {
 public:
  constexpr Probability() = default;
  explicit Probability(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0)) {
      throw DomainError("probability must lie in [0, 1], got " + std::to_string(value));
    }
  }

  [[nodiscard]] constexpr double value() const noexcept { return value_; }
  constexpr operator double() const noexcept { return value_; }  // NOLINT

  /// Clamps a raw value into [0, 1]; NaN is still rejected.
  static Probability clamped(double value) {
    if (std::isnan(value)) throw DomainError("probability is NaN");
    return Probability(value < 0.0 ? 0.0 : (value > 1.0 ? 1.0 : value));
  }

 private:
  double value_ = 0.0;
};

/// Chi-square degrees of freedom, strictly positive.
class DegreesOfFreedom {
 public:
  explicit DegreesOfFreedom(double value) : value_(value) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw DomainError("degrees of freedom must be positive, got " + std::to_string(value));
    }
  }

  [[nodiscard]] constexpr double value() const noexcept { return value_; }

  /// f = p(p+1)/2 - 1, the degrees of freedom of the sphericity chi-square limits.
  static DegreesOfFreedom sphericity(int p) {
    return DegreesOfFreedom(0.5 * p * (p + 1.0) - 1.0);
  }

 private:
  double value_;
};

/// Standard normal CDF.
inline Probability normal_cdf(double x) {
  if (!std::isfinite(x)) throw DomainError("normal_cdf: non-finite argument");
  return Probability(0.5 * std::erfc(-x / std::numbers::sqrt2));
}

/// Standard normal quantile, refined by one Newton step against normal_cdf.
inline double normal_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw DomainError("normal_quantile: q must lie in (0, 1), got " + std::to_string(q));
  }
  double x = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
  const double density = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  if (density > 0.0) x -= (normal_cdf(x).value() - q) / density;
  return x;
}

/// Upper normal tail 1 - Phi(z), computed without cancellation.
inline Probability normal_upper_tail(double z) {
  if (!std::isfinite(z)) throw DomainError("normal_upper_tail: non-finite argument");
  return Probability(0.5 * std::erfc(z / std::numbers::sqrt2));
}

/// P(chi^2_f <= x), the regularized lower incomplete gamma P(f/2, x/2).
inline Probability chisq_cdf(double x, DegreesOfFreedom f) {
  if (std::isnan(x)) throw DomainError("chisq_cdf: NaN argument");
  if (x <= 0.0) return Probability(0.0);
  if (std::isinf(x)) return Probability(1.0);
  return Probability(boost::math::gamma_p(0.5 * f.value(), 0.5 * x));
}

/// P(chi^2_f > x), computed from the upper regularized gamma.
inline Probability chisq_upper_tail(double x, DegreesOfFreedom f) {
  if (std::isnan(x)) throw DomainError("chisq_upper_tail: NaN argument");
  if (x <= 0.0) return Probability(1.0);
  if (std::isinf(x)) return Probability(0.0);
  return Probability(boost::math::gamma_q(0.5 * f.value(), 0.5 * x));
}

}  // namespace sphericity
