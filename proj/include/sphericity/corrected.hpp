#pragma once

// Large-dimensional corrections of the likelihood ratio test (CLRT) and of
// John's test (CJ) for data with arbitrary finite fourth moment, their
// unknown-mean variants, and the fourth-moment estimator they plug in.

#include <cmath>
#include <string>
#include <type_traits>

#include "sphericity/classical.hpp"
#include "sphericity/errors.hpp"
#include "sphericity/numerics.hpp"
#include "sphericity/spectra.hpp"

namespace sphericity {

/// Field indicator kappa (2 real, 1 complex) and kurtosis offset
/// beta = E|x|^4 - 1 - kappa of the standardized entries.
class MomentProfile {
 public:
  MomentProfile(int kappa, double beta) : kappa_(kappa), beta_(beta) {
    if (kappa != 1 && kappa != 2) throw DomainError("kappa must be 1 (complex) or 2 (real)");
    if (!std::isfinite(beta) || beta < -static_cast<double>(kappa)) {
      throw DomainError("beta must be finite and >= -kappa, got " + std::to_string(beta));
    }
  }

  static MomentProfile real_gaussian() { return {2, 0.0}; }
  static MomentProfile complex_gaussian() { return {1, 0.0}; }

  [[nodiscard]] int kappa() const noexcept { return kappa_; }
  [[nodiscard]] double beta() const noexcept { return beta_; }

 private:
  int kappa_;
  double beta_;
};

/// (p, n) with the plug-in ratio y_n = p / N, where N = n for a known mean
/// and N = n - 1 otherwise.
class DimensionRatio {
 public:
  DimensionRatio(Index p, Index n, MeanConvention convention = MeanConvention::kKnown)
      : p_(p), n_(n), convention_(convention) {
    if (p < 1 || n < 1) throw DomainError("dimension and sample size must be positive");
    if (effective_samples(n, convention) < 1) {
      throw InsufficientDataError("unknown-mean calibration needs n >= 2");
    }
  }

  [[nodiscard]] Index p() const noexcept { return p_; }
  [[nodiscard]] Index n() const noexcept { return n_; }
  [[nodiscard]] MeanConvention convention() const noexcept { return convention_; }
  [[nodiscard]] Index effective_n() const noexcept { return effective_samples(n_, convention_); }
  [[nodiscard]] double y() const noexcept {
    return static_cast<double>(p_) / static_cast<double>(effective_n());
  }
  [[nodiscard]] double h() const noexcept { return std::sqrt(y()); }

 private:
  Index p_;
  Index n_;
  MeanConvention convention_;
};

/// Mean and variance of a univariate normal limit.
struct NormalLaw {
  double mean = 0.0;
  double variance = 0.0;
};

/// Limit of L_n + (p - n) log(1 - p/n) - p under the null:
/// N(-(kappa-1)/2 log(1-y) + beta y / 2, -kappa log(1-y) - kappa y).
[[nodiscard]] inline NormalLaw clrt_limit_law(double y, const MomentProfile& m) {
  if (!(y > 0.0 && y < 1.0)) {
    throw UnsupportedRegimeError("CLRT needs 0 < p/n < 1, got y = " + std::to_string(y));
  }
  const double log1my = std::log1p(-y);
  const double kappa = m.kappa();
  return {-0.5 * (kappa - 1.0) * log1my + 0.5 * m.beta() * y, -kappa * (log1my + y)};
}

[[nodiscard]] inline NormalLaw clrt_limit_law(const DimensionRatio& ratio, const MomentProfile& m) {
  return clrt_limit_law(ratio.y(), m);
}

/// Centering of the CLRT statistic: (p - N) log(1 - p/N) - p.
[[nodiscard]] inline double clrt_centering(const DimensionRatio& ratio) {
  const double p = static_cast<double>(ratio.p());
  const double big_n = static_cast<double>(ratio.effective_n());
  return (p - big_n) * std::log1p(-ratio.y()) - p;
}

/// Corrected likelihood-ratio test. Rejects for large
/// z = (L_n + (p-N) log(1-p/N) - p - mean) / sd.
[[nodiscard]] inline TestOutcome clrt_test(const SpectralSummary& s, const MomentProfile& m) {
  const DimensionRatio ratio(s.p, s.n, s.convention);
  if (ratio.p() >= ratio.effective_n()) {
    throw UnsupportedRegimeError("CLRT needs p < " +
                                 std::string(is_mean_known(s.convention) ? "n" : "n - 1") +
                                 " (p = " + std::to_string(s.p) + ", n = " + std::to_string(s.n) +
                                 ")");
  }
  const auto law = clrt_limit_law(ratio, m);
  const double stat = lrt_statistic(s).normalized;
  const double z = (stat + clrt_centering(ratio) - law.mean) / std::sqrt(law.variance);

  TestOutcome out;
  out.test = TestId::kClrt;
  out.statistic = stat;
  out.reference_value = z;
  out.reference = ReferenceKind::kStandardNormal;
  out.p_value = normal_upper_tail(z);
  out.params = {s.p, s.n, m.kappa(), m.beta(), is_mean_known(s.convention)};
  if (ratio.y() > 0.98) {
    out.warnings.emplace_back("p/n = " + std::to_string(ratio.y()) +
                              " is close to 1; the CLRT calibration is fragile here");
  }
  return out;
}

[[nodiscard]] inline TestOutcome clrt_test(const EigenSpectrum& spectrum, const MomentProfile& m) {
  return clrt_test(summarize(spectrum), m);
}

/// Limit of nU - p under the null: N(kappa + beta - 1, 2 kappa), free of y.
[[nodiscard]] inline NormalLaw cj_limit_law(const MomentProfile& m) {
  return {m.kappa() + m.beta() - 1.0, 2.0 * m.kappa()};
}

/// Centering of nU: p for a known mean, np/(n-1) otherwise.
[[nodiscard]] inline double cj_centering(Index p, Index n, MeanConvention convention) {
  const double pd = static_cast<double>(p);
  if (is_mean_known(convention)) return pd;
  const double nd = static_cast<double>(n);
  return nd * pd / (nd - 1.0);
}

namespace detail {

inline TestOutcome john_normal_test(const SpectralSummary& s, const MomentProfile& m, TestId id) {
  if (s.p < 2) throw DomainError("John-type tests need p >= 2");
  if (!is_mean_known(s.convention) && s.n < 2) {
    throw InsufficientDataError("unknown-mean calibration needs n >= 2");
  }
  const double u = john_statistic(s).u;
  const auto law = cj_limit_law(m);
  const double n = static_cast<double>(s.n);
  const double z = (n * u - cj_centering(s.p, s.n, s.convention) - law.mean) / std::sqrt(law.variance);

  TestOutcome out;
  out.test = id;
  out.statistic = u;
  out.reference_value = z;
  out.reference = ReferenceKind::kStandardNormal;
  out.p_value = normal_upper_tail(z);
  out.params = {s.p, s.n, m.kappa(), m.beta(), is_mean_known(s.convention)};
  return out;
}

}  // namespace detail

/// Corrected John's test; valid for any p/n > 0, including p much larger than n.
[[nodiscard]] inline TestOutcome cj_test(const SpectralSummary& s, const MomentProfile& m) {
  return detail::john_normal_test(s, m, TestId::kCj);
}

[[nodiscard]] inline TestOutcome cj_test(const EigenSpectrum& spectrum, const MomentProfile& m) {
  return cj_test(summarize(spectrum), m);
}

/// Summary built from tr S and tr S^2 only; enough for John, Nagao, CJ and LW.
[[nodiscard]] inline SpectralSummary summary_from_traces(Index p, Index n, MeanConvention convention,
                                                         double trace, double trace_sq) {
  if (p < 1 || n < 1) throw DomainError("dimension and sample size must be positive");
  SpectralSummary s;
  s.p = p;
  s.n = n;
  s.convention = convention;
  s.sum = trace;
  s.sum_sq = trace_sq;
  s.dispersion = std::max(trace_sq - trace * trace / static_cast<double>(p), 0.0);
  return s;
}

/// CJ with the normal-theory calibration N(1, 4) (kappa = 2, beta = 0).
[[nodiscard]] inline TestOutcome lw_test(const SpectralSummary& s) {
  return detail::john_normal_test(s, MomentProfile::real_gaussian(), TestId::kLw);
}

[[nodiscard]] inline TestOutcome lw_test(const EigenSpectrum& spectrum) {
  return lw_test(summarize(spectrum));
}

/// Fourth-moment estimate of beta: mean |Y|^4 / (mean |Y|^2)^2 - kappa - 1.
///
/// Entries are standardized by the global second moment so the estimate does
/// not depend on the unknown scale sigma^2. With an unknown mean each
/// coordinate is centered at its sample mean first.
template <class Scalar>
[[nodiscard]] double estimate_beta(const BasicDataMatrix<Scalar>& data, int kappa,
                                   MeanConvention convention = MeanConvention::kKnown) {
  if (kappa != 1 && kappa != 2) throw DomainError("kappa must be 1 or 2");
  const auto y = detail::centered(data, convention);
  detail::CompensatedSum m2;
  detail::CompensatedSum m4;
  for (Index j = 0; j < y.cols(); ++j) {
    for (Index i = 0; i < y.rows(); ++i) {
      const double a2 = detail::abs2(y(i, j));
      m2.add(a2);
      m4.add(a2 * a2);
    }
  }
  const double count = static_cast<double>(y.size());
  const double second = m2.value() / count;
  if (!(second > 0.0)) throw DegenerateSpectrumError("data has zero variance; beta is undefined");
  return (m4.value() / count) / (second * second) - kappa - 1.0;
}

}  // namespace sphericity
