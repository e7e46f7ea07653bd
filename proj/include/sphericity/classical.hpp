#pragma once

// Fixed-dimension calibrations of the sphericity test: the likelihood ratio
// test with its chi-square limit, its Box-Bartlett correction, John's test and
// Nagao's O(1/n) expansion for John's statistic.

#include <cctype>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sphericity/errors.hpp"
#include "sphericity/numerics.hpp"
#include "sphericity/spectra.hpp"

namespace sphericity {

enum class TestId { kLrt, kBblrt, kJohn, kNagao, kClrt, kCj, kLw };

inline constexpr TestId kAllTests[] = {TestId::kLrt,  TestId::kBblrt, TestId::kJohn, TestId::kNagao,
                                       TestId::kClrt, TestId::kCj,    TestId::kLw};

[[nodiscard]] inline std::string_view to_string(TestId id) noexcept {
  switch (id) {
    case TestId::kLrt: return "LRT";
    case TestId::kBblrt: return "BBLRT";
    case TestId::kJohn: return "JOHN";
    case TestId::kNagao: return "NAGAO";
    case TestId::kClrt: return "CLRT";
    case TestId::kCj: return "CJ";
    case TestId::kLw: return "LW";
  }
  return "?";
}

/// Case-insensitive parse of a test name ("clrt", "CJ", ...).
[[nodiscard]] inline std::optional<TestId> parse_test_id(std::string_view name) {
  std::string upper(name);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (TestId id : kAllTests) {
    if (upper == to_string(id)) return id;
  }
  return std::nullopt;
}

/// The distribution the reference value is compared against.
enum class ReferenceKind { kChiSquare, kStandardNormal };

struct TestParams {
  Index p = 0;
  Index n = 0;
  int kappa = 2;
  double beta = 0.0;
  bool mean_known = true;
};

struct TestOutcome {
  TestId test = TestId::kLrt;
  double statistic = 0.0;
  /// z-value for normal calibrations, chi-square argument otherwise.
  double reference_value = 0.0;
  ReferenceKind reference = ReferenceKind::kChiSquare;
  Probability p_value;
  TestParams params;
  /// Set when an asymptotic expansion left [0, 1] and the p-value was clamped.
  bool clamped = false;
  std::vector<std::string> warnings;

  [[nodiscard]] bool rejects(Probability alpha) const noexcept { return p_value.value() < alpha.value(); }
};

namespace detail {

inline TestParams normal_theory_params(const SpectralSummary& s) {
  return {s.p, s.n, 2, 0.0, is_mean_known(s.convention)};
}

inline double require_positive_mean(const SpectralSummary& s) {
  const double mean = s.mean();
  if (!(mean > 0.0)) throw DegenerateSpectrumError("mean eigenvalue is zero");
  return mean;
}

}  // namespace detail

struct LrtStatistic {
  /// -2 log L_n = n * normalized.
  double minus_two_log_ln = 0.0;
  /// p log(lbar) - sum log l_i, the log ratio of arithmetic to geometric mean times p.
  double normalized = 0.0;
};

/// -2 log L_n with L_n = (geometric mean / arithmetic mean)^(pn/2).
/// The sample size is n, or n-1 for an unknown-mean spectrum.
[[nodiscard]] inline LrtStatistic lrt_statistic(const SpectralSummary& s) {
  detail::require_positive_mean(s);
  const double normalized = -s.require_log_ratio_sum();
  const double n_eff = static_cast<double>(effective_samples(s.n, s.convention));
  return {n_eff * normalized, normalized};
}

[[nodiscard]] inline LrtStatistic lrt_statistic(const EigenSpectrum& spectrum) {
  return lrt_statistic(summarize(spectrum));
}

/// Plain LRT: -2 log L_n against chi^2_f, f = p(p+1)/2 - 1.
[[nodiscard]] inline TestOutcome lrt_test(const SpectralSummary& s) {
  if (s.p < 2) throw DomainError("sphericity tests need p >= 2");
  const auto stat = lrt_statistic(s);
  const auto f = DegreesOfFreedom::sphericity(static_cast<int>(s.p));
  TestOutcome out;
  out.test = TestId::kLrt;
  out.statistic = stat.minus_two_log_ln;
  out.reference_value = stat.minus_two_log_ln;
  out.reference = ReferenceKind::kChiSquare;
  out.p_value = chisq_upper_tail(stat.minus_two_log_ln, f);
  out.params = detail::normal_theory_params(s);
  return out;
}

[[nodiscard]] inline TestOutcome lrt_test(const EigenSpectrum& spectrum) {
  return lrt_test(summarize(spectrum));
}

struct BbLrtCoefficients {
  double rho = 0.0;
  double omega2 = 0.0;
  double f = 0.0;
};

/// Box-Bartlett rho and omega_2 for dimension p and sample size n.
[[nodiscard]] inline BbLrtCoefficients bblrt_coefficients(Index p_in, Index n_in) {
  const double p = static_cast<double>(p_in);
  const double n = static_cast<double>(n_in);
  const double rho = 1.0 - (2.0 * p * p + p + 2.0) / (6.0 * p * n);
  const double omega2 = (p + 2.0) * (p - 1.0) * (p - 2.0) *
                        (2.0 * p * p * p + 6.0 * p * p + 3.0 * p + 2.0) /
                        (288.0 * p * p * n * n * rho * rho);
  return {rho, omega2, 0.5 * p * (p + 1.0) - 1.0};
}

/// Box-Bartlett corrected LRT. The p-value is
/// 1 - [P_f(x) + omega_2 (P_{f+4}(x) - P_f(x))] at x = -2 rho log L_n, clamped to [0, 1].
[[nodiscard]] inline TestOutcome bblrt_test(const SpectralSummary& s) {
  if (s.p < 2) throw DomainError("BBLRT needs p >= 2");
  const Index n_eff = effective_samples(s.n, s.convention);
  const auto stat = lrt_statistic(s);
  const auto c = bblrt_coefficients(s.p, n_eff);
  const double x = c.rho * stat.minus_two_log_ln;
  const DegreesOfFreedom f(c.f);
  const DegreesOfFreedom f4(c.f + 4.0);
  // Upper-tail form of the expansion; avoids 1 - (something close to 1).
  const double qf = chisq_upper_tail(x, f);
  const double raw = qf - c.omega2 * (qf - chisq_upper_tail(x, f4));

  TestOutcome out;
  out.test = TestId::kBblrt;
  out.statistic = stat.minus_two_log_ln;
  out.reference_value = x;
  out.reference = ReferenceKind::kChiSquare;
  out.p_value = Probability::clamped(raw);
  out.clamped = raw < 0.0 || raw > 1.0;
  out.params = detail::normal_theory_params(s);
  if (c.rho <= 0.0) out.warnings.emplace_back("Box-Bartlett rho is not positive; expansion invalid");
  return out;
}

[[nodiscard]] inline TestOutcome bblrt_test(const EigenSpectrum& spectrum) {
  return bblrt_test(summarize(spectrum));
}

struct JohnStatistic {
  double t2 = 0.0;
  /// U = (p^-1 sum l_i^2) / lbar^2 - 1, the squared coefficient of variation.
  double u = 0.0;
};

/// John's T_2 = (n p / 2) U; n is replaced by n-1 for an unknown-mean spectrum.
[[nodiscard]] inline JohnStatistic john_statistic(const SpectralSummary& s) {
  const double mean = detail::require_positive_mean(s);
  const double p = static_cast<double>(s.p);
  const double u = s.dispersion / (p * mean * mean);
  const double n_eff = static_cast<double>(effective_samples(s.n, s.convention));
  return {0.5 * n_eff * p * u, u};
}

[[nodiscard]] inline JohnStatistic john_statistic(const EigenSpectrum& spectrum) {
  return john_statistic(summarize(spectrum));
}

/// John's test: T_2 against chi^2_f.
[[nodiscard]] inline TestOutcome john_chisq_test(const SpectralSummary& s) {
  if (s.p < 2) throw DomainError("John's test needs p >= 2");
  const auto stat = john_statistic(s);
  TestOutcome out;
  out.test = TestId::kJohn;
  out.statistic = stat.t2;
  out.reference_value = stat.t2;
  out.reference = ReferenceKind::kChiSquare;
  out.p_value = chisq_upper_tail(stat.t2, DegreesOfFreedom::sphericity(static_cast<int>(s.p)));
  out.params = detail::normal_theory_params(s);
  return out;
}

[[nodiscard]] inline TestOutcome john_chisq_test(const EigenSpectrum& spectrum) {
  return john_chisq_test(summarize(spectrum));
}

struct NagaoCoefficients {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  double f = 0.0;
};

/// Coefficients of Nagao's O(1/n) expansion of P(T_2 <= x):
///   a = (p^3 + 3p^2 - 8p - 12 - 200/p) / 12
///   b = (-2p^3 - 5p^2 + 7p + 12 + 420/p) / 8
///   c = (p^3 + 2p^2 - p - 2 - 216/p) / 4
///   d = (-2p^3 - 3p^2 + p + 436/p) / 24
/// They satisfy a + b + c + d = 0, so the expansion tends to 1 as x grows.
[[nodiscard]] inline NagaoCoefficients nagao_coefficients(Index p_in) {
  const double p = static_cast<double>(p_in);
  const double p2 = p * p;
  const double p3 = p2 * p;
  return {(p3 + 3.0 * p2 - 8.0 * p - 12.0 - 200.0 / p) / 12.0,
          (-2.0 * p3 - 5.0 * p2 + 7.0 * p + 12.0 + 420.0 / p) / 8.0,
          (p3 + 2.0 * p2 - p - 2.0 - 216.0 / p) / 4.0,
          (-2.0 * p3 - 3.0 * p2 + p + 436.0 / p) / 24.0,
          0.5 * p * (p + 1.0) - 1.0};
}

/// Nagao's test: p-value 1 - [P_f + n^-1 (a P_{f+6} + b P_{f+4} + c P_{f+2} + d P_f)]
/// at x = T_2, clamped to [0, 1].
[[nodiscard]] inline TestOutcome nagao_test(const SpectralSummary& s) {
  if (s.p < 2) throw DomainError("Nagao's test needs p >= 2");
  const auto stat = john_statistic(s);
  const auto k = nagao_coefficients(s.p);
  const double n_eff = static_cast<double>(effective_samples(s.n, s.convention));
  const double x = stat.t2;
  const double q0 = chisq_upper_tail(x, DegreesOfFreedom(k.f));
  const double q2 = chisq_upper_tail(x, DegreesOfFreedom(k.f + 2.0));
  const double q4 = chisq_upper_tail(x, DegreesOfFreedom(k.f + 4.0));
  const double q6 = chisq_upper_tail(x, DegreesOfFreedom(k.f + 6.0));
  // P_k = 1 - Q_k; the constant parts cancel because a + b + c + d = 0, which
  // keeps the tail free of cancellation.
  const double correction = k.a * (q6 - q0) + k.b * (q4 - q0) + k.c * (q2 - q0);
  const double raw = q0 + correction / n_eff;

  TestOutcome out;
  out.test = TestId::kNagao;
  out.statistic = stat.t2;
  out.reference_value = x;
  out.reference = ReferenceKind::kChiSquare;
  out.p_value = Probability::clamped(raw);
  out.clamped = raw < 0.0 || raw > 1.0;
  out.params = detail::normal_theory_params(s);
  return out;
}

[[nodiscard]] inline TestOutcome nagao_test(const EigenSpectrum& spectrum) {
  return nagao_test(summarize(spectrum));
}

}  // namespace sphericity
