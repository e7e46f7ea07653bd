#pragma once

// Asymptotic power of CLRT and CJ against spiked alternatives.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "sphericity/classical.hpp"
#include "sphericity/corrected.hpp"
#include "sphericity/mp_centering.hpp"
#include "sphericity/numerics.hpp"

namespace sphericity {

struct PowerCurvePoint {
  double y = 0.0;
  Probability alpha;
  Probability power;
  TestId test = TestId::kClrt;
};

/// Deterministic shifts of the CLRT and CJ statistics under a spiked
/// population; the limiting variances are those of the null.
struct ShiftedNullLaws {
  /// Added to the log-determinant LSS: sum n_i (log a_i - a_i + 1).
  double clrt_shift = 0.0;
  /// Added to p in the CJ centering: (n/p) sum n_i (a_i - 1)^2.
  double cj_shift = 0.0;
};

namespace detail {

inline double upper_power(Probability alpha, double drift) {
  if (drift == 0.0) return alpha.value();
  const double z = normal_quantile(1.0 - alpha.value());
  return Probability::clamped(1.0 - normal_cdf(z - drift).value()).value();
}

inline double clrt_sd(double y, const MomentProfile& m) {
  if (!(y > 0.0 && y < 1.0)) {
    throw DomainError("CLRT power needs 0 < y < 1, got y = " + std::to_string(y));
  }
  return std::sqrt(-m.kappa() * (std::log1p(-y) + y));
}

inline double clrt_excess(const SpikedModel& s) {
  return s.weighted_sum([](double a) { return a - std::log(a) - 1.0; });
}

inline double cj_excess(const SpikedModel& s) {
  return s.weighted_sum([](double a) { return (a - 1.0) * (a - 1.0); });
}

}  // namespace detail

[[nodiscard]] inline Probability clrt_power(Probability alpha, const SpikedModel& s, double y,
                                            const MomentProfile& m) {
  const double sd = detail::clrt_sd(y, m);
  return Probability(detail::upper_power(alpha, detail::clrt_excess(s) / sd));
}

/// CJ power as a function of y (n/p read as 1/y).
[[nodiscard]] inline Probability cj_power(Probability alpha, const SpikedModel& s, double y,
                                          const MomentProfile& m) {
  if (!(y > 0.0) || !std::isfinite(y)) {
    throw DomainError("CJ power needs y > 0, got y = " + std::to_string(y));
  }
  const double drift = detail::cj_excess(s) / y / std::sqrt(2.0 * m.kappa());
  return Probability(detail::upper_power(alpha, drift));
}

/// Finite-sample predictions: y_n = p/N for CLRT and the literal N/p for CJ.
[[nodiscard]] inline Probability clrt_power(Probability alpha, const SpikedModel& s,
                                            const DimensionRatio& ratio, const MomentProfile& m) {
  return clrt_power(alpha, s, ratio.y(), m);
}

[[nodiscard]] inline Probability cj_power(Probability alpha, const SpikedModel& s,
                                          const DimensionRatio& ratio, const MomentProfile& m) {
  return cj_power(alpha, s, ratio.y(), m);
}

[[nodiscard]] inline ShiftedNullLaws shifted_null_laws(const DimensionRatio& ratio,
                                                       const SpikedModel& s,
                                                       const MomentProfile& /*m*/) {
  ShiftedNullLaws out;
  out.clrt_shift = -detail::clrt_excess(s);
  out.cj_shift = detail::cj_excess(s) / ratio.y();
  return out;
}

/// Power of `test` (CLRT or CJ) at each y of the grid.
[[nodiscard]] inline std::vector<PowerCurvePoint> power_curve(TestId test, Probability alpha,
                                                              const SpikedModel& s,
                                                              const MomentProfile& m,
                                                              std::span<const double> y_grid) {
  if (test != TestId::kClrt && test != TestId::kCj) {
    throw ConfigurationError("power curves are available for CLRT and CJ only, not " +
                             std::string(to_string(test)));
  }
  std::vector<PowerCurvePoint> out;
  out.reserve(y_grid.size());
  for (double y : y_grid) {
    const auto power = test == TestId::kClrt ? clrt_power(alpha, s, y, m) : cj_power(alpha, s, y, m);
    out.push_back({y, alpha, power, test});
  }
  return out;
}

}  // namespace sphericity
