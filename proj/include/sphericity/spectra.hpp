#pragma once

// Sample covariance matrices, their eigenvalues, and the spectral sums
// (sum, sum of squares, sum of logs) every test statistic is built from.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "sphericity/errors.hpp"

namespace sphericity {

using Index = Eigen::Index;

/// Which divisor the sample covariance uses: 1/n around a known (zero) mean,
/// or 1/(n-1) around the sample mean.
enum class MeanConvention { kKnown, kUnknown };

[[nodiscard]] inline bool is_mean_known(MeanConvention c) noexcept {
  return c == MeanConvention::kKnown;
}

/// Sample size the centering terms use: n, or n-1 when the mean is estimated.
[[nodiscard]] inline Index effective_samples(Index n, MeanConvention c) noexcept {
  return is_mean_known(c) ? n : n - 1;
}

namespace detail {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

template <class Scalar>
[[nodiscard]] double abs2(const Scalar& x) noexcept {
  if constexpr (std::is_floating_point_v<Scalar>) {
    return x * x;
  } else {
    return std::norm(x);
  }
}

template <class Scalar>
[[nodiscard]] bool all_finite(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m) {
  if constexpr (std::is_floating_point_v<Scalar>) {
    return m.allFinite();
  } else {
    return m.real().allFinite() && m.imag().allFinite();
  }
}

}  // namespace detail

/// p x n observation table; column j is the observation Y_j.
template <class Scalar = double>
class BasicDataMatrix {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  explicit BasicDataMatrix(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() < 1 || entries_.cols() < 1) {
      throw InsufficientDataError("data matrix needs p >= 1 and n >= 1");
    }
    if (!detail::all_finite(entries_)) throw DomainError("data matrix has non-finite entries");
  }

  /// Builds from an n x p table whose rows are observations.
  static BasicDataMatrix from_observation_rows(const Matrix& rows) {
    return BasicDataMatrix(rows.transpose());
  }

  [[nodiscard]] const Matrix& entries() const noexcept { return entries_; }
  [[nodiscard]] Index dim() const noexcept { return entries_.rows(); }
  [[nodiscard]] Index samples() const noexcept { return entries_.cols(); }

 private:
  Matrix entries_;
};

using DataMatrix = BasicDataMatrix<double>;
using ComplexDataMatrix = BasicDataMatrix<std::complex<double>>;

/// Symmetric (Hermitian) p x p sample covariance with its divisor convention.
template <class Scalar = double>
class BasicCovarianceMatrix {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  /// `samples` is the number of observations the matrix was formed from.
  BasicCovarianceMatrix(Matrix entries, Index samples, MeanConvention convention)
      : entries_(std::move(entries)), samples_(samples), convention_(convention) {
    if (entries_.rows() != entries_.cols() || entries_.rows() < 1) {
      throw DomainError("covariance matrix must be square and non-empty");
    }
    if (samples_ < 1) throw InsufficientDataError("covariance needs at least one sample");
    const double scale = std::max(entries_.cwiseAbs().maxCoeff(), 1e-300);
    const double asym = (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale) throw DomainError("covariance matrix is not symmetric/Hermitian");
  }

  [[nodiscard]] const Matrix& entries() const noexcept { return entries_; }
  [[nodiscard]] Index dim() const noexcept { return entries_.rows(); }
  [[nodiscard]] Index samples() const noexcept { return samples_; }
  [[nodiscard]] MeanConvention convention() const noexcept { return convention_; }

 private:
  Matrix entries_;
  Index samples_;
  MeanConvention convention_;
};

using CovarianceMatrix = BasicCovarianceMatrix<double>;
using ComplexCovarianceMatrix = BasicCovarianceMatrix<std::complex<double>>;

namespace detail {

/// Observations with the sample mean removed when the mean is unknown.
template <class Scalar>
[[nodiscard]] Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> centered(
    const BasicDataMatrix<Scalar>& data, MeanConvention convention) {
  if (is_mean_known(convention)) return data.entries();
  if (data.samples() < 2) {
    throw InsufficientDataError("unknown-mean covariance needs at least two observations");
  }
  const auto mean = data.entries().rowwise().mean().eval();
  return data.entries().colwise() - mean;
}

}  // namespace detail

/// S_n = n^-1 sum Y_i Y_i^* (known mean) or S_n^* = (n-1)^-1 sum (Y_i - Ybar)(Y_i - Ybar)^*.
template <class Scalar>
[[nodiscard]] BasicCovarianceMatrix<Scalar> sample_covariance(const BasicDataMatrix<Scalar>& data,
                                                              MeanConvention convention) {
  using Matrix = typename BasicDataMatrix<Scalar>::Matrix;
  const Matrix y = detail::centered(data, convention);
  const Index p = data.dim();
  const double divisor = static_cast<double>(effective_samples(data.samples(), convention));
  Matrix s = Matrix::Zero(p, p);
  s.template selfadjointView<Eigen::Lower>().rankUpdate(y, 1.0 / divisor);
  Matrix full = s.template selfadjointView<Eigen::Lower>();
  return BasicCovarianceMatrix<Scalar>(std::move(full), data.samples(), convention);
}

/// Sorted nonnegative eigenvalues of a sample covariance, with (p, n) metadata.
class EigenSpectrum {
 public:
  /// Relative threshold below which an eigenvalue is treated as zero.
  static constexpr double kZeroThreshold = 1e-10;

  /// `values` need not be sorted. Values below kZeroThreshold * max are set to 0;
  /// values below -kZeroThreshold * max are rejected.
  EigenSpectrum(std::vector<double> values, Index samples,
                MeanConvention convention = MeanConvention::kKnown)
      : values_(std::move(values)), samples_(samples), convention_(convention) {
    if (values_.empty()) throw DomainError("spectrum must have at least one eigenvalue");
    if (samples_ < 1) throw InsufficientDataError("spectrum needs n >= 1");
    for (double v : values_) {
      if (!std::isfinite(v)) throw DomainError("spectrum has non-finite eigenvalues");
    }
    std::sort(values_.begin(), values_.end());
    const double top = std::max(values_.back(), 0.0);
    const double eps = kZeroThreshold * top;
    if (values_.front() < -eps) {
      throw DomainError("spectrum has materially negative eigenvalues");
    }
    for (double& v : values_) {
      if (v < eps || top == 0.0) v = 0.0;
    }
  }

  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] Index dim() const noexcept { return static_cast<Index>(values_.size()); }
  [[nodiscard]] Index samples() const noexcept { return samples_; }
  [[nodiscard]] MeanConvention convention() const noexcept { return convention_; }

  /// Same spectrum with every eigenvalue multiplied by c > 0.
  [[nodiscard]] EigenSpectrum scaled(double c) const {
    if (!(c > 0.0)) throw DomainError("spectrum scale must be positive");
    std::vector<double> v(values_);
    for (double& x : v) x *= c;
    return EigenSpectrum(std::move(v), samples_, convention_);
  }

 private:
  std::vector<double> values_;
  Index samples_;
  MeanConvention convention_;
};

template <class Scalar>
[[nodiscard]] EigenSpectrum eigenvalues(const BasicCovarianceMatrix<Scalar>& s) {
  using Matrix = typename BasicCovarianceMatrix<Scalar>::Matrix;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s.entries(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("self-adjoint eigensolver did not converge (p = " +
                         std::to_string(s.dim()) + ")");
  }
  const auto& ev = solver.eigenvalues();
  return EigenSpectrum(std::vector<double>(ev.data(), ev.data() + ev.size()), s.samples(),
                       s.convention());
}

/// Everything the seven sphericity statistics depend on, with the (p, n)
/// metadata: the eigenvalue sum, the sum of squares, the dispersion
/// sum (l_i - lbar)^2 and, when every eigenvalue is positive, the log ratio
/// sum log(l_i / lbar) = log(geometric mean / arithmetic mean) * p.
struct SpectralSummary {
  Index p = 0;
  Index n = 0;
  MeanConvention convention = MeanConvention::kKnown;
  double sum = 0.0;
  double sum_sq = 0.0;
  double dispersion = 0.0;
  std::optional<double> log_ratio_sum;

  [[nodiscard]] double mean() const noexcept { return sum / static_cast<double>(p); }

  [[nodiscard]] double require_log_ratio_sum() const {
    if (!log_ratio_sum) {
      throw DegenerateSpectrumError(
          "log-based statistic needs strictly positive eigenvalues (p < n and full rank)");
    }
    return *log_ratio_sum;
  }
};

struct SpectralSums {
  double sum = 0.0;
  double sum_sq = 0.0;
  double sum_log = 0.0;
};

/// Compensated sum, sum of squares and sum of logs. Throws when any eigenvalue is zero.
[[nodiscard]] inline SpectralSums spectral_sums(const EigenSpectrum& spectrum) {
  detail::CompensatedSum s;
  detail::CompensatedSum s2;
  detail::CompensatedSum sl;
  for (double v : spectrum.values()) {
    if (v <= 0.0) {
      throw DegenerateSpectrumError(
          "spectrum has zero eigenvalues; log-based statistics need p < n and full rank");
    }
    s.add(v);
    s2.add(v * v);
    sl.add(std::log(v));
  }
  return {s.value(), s2.value(), sl.value()};
}

/// Summary of a spectrum; log_ratio_sum is left empty when the spectrum has zeros.
[[nodiscard]] inline SpectralSummary summarize(const EigenSpectrum& spectrum) {
  SpectralSummary out;
  out.p = spectrum.dim();
  out.n = spectrum.samples();
  out.convention = spectrum.convention();
  detail::CompensatedSum s;
  detail::CompensatedSum s2;
  for (double v : spectrum.values()) {
    s.add(v);
    s2.add(v * v);
  }
  out.sum = s.value();
  out.sum_sq = s2.value();
  const double mean = out.mean();
  if (!(mean > 0.0)) return out;
  if (spectrum.values().front() == spectrum.values().back()) {
    // A flat spectrum is exactly spherical; avoid round-off in the mean.
    out.log_ratio_sum = 0.0;
    return out;
  }
  detail::CompensatedSum disp;
  detail::CompensatedSum lr;
  bool positive = true;
  for (double v : spectrum.values()) {
    const double ratio = v / mean;
    disp.add((ratio - 1.0) * (ratio - 1.0));
    if (v > 0.0) {
      lr.add(std::log(ratio));
    } else {
      positive = false;
    }
  }
  out.dispersion = disp.value() * mean * mean;
  if (positive) out.log_ratio_sum = lr.value();
  return out;
}

/// Spectral summary computed straight from data without an eigendecomposition.
///
/// tr S and tr S^2 come from whichever of the p x p covariance or the n x n Gram
/// matrix is smaller. With `need_log`, log det S comes from a Cholesky factor;
/// near-singular pivots fall back to the eigenvalue route so the zero threshold
/// stays the same as in EigenSpectrum.
template <class Scalar>
[[nodiscard]] SpectralSummary summarize_data(const BasicDataMatrix<Scalar>& data,
                                             MeanConvention convention, bool need_log) {
  using Matrix = typename BasicDataMatrix<Scalar>::Matrix;
  const Index p = data.dim();
  const Index n = data.samples();
  const Index eff = effective_samples(n, convention);
  SpectralSummary out;
  out.p = p;
  out.n = n;
  out.convention = convention;

  if (!need_log && p > eff) {
    const Matrix y = detail::centered(data, convention);
    Matrix gram = Matrix::Zero(n, n);
    gram.template selfadjointView<Eigen::Lower>().rankUpdate(y.adjoint(),
                                                             1.0 / static_cast<double>(eff));
    double tr = 0.0;
    double tr2 = 0.0;
    for (Index j = 0; j < n; ++j) {
      tr += std::real(gram(j, j));
      tr2 += detail::abs2(gram(j, j));
      for (Index i = j + 1; i < n; ++i) tr2 += 2.0 * detail::abs2(gram(i, j));
    }
    out.sum = tr;
    out.sum_sq = tr2;
    out.dispersion = std::max(tr2 - tr * tr / static_cast<double>(p), 0.0);
    return out;
  }

  const auto cov = sample_covariance(data, convention);
  const Matrix& s = cov.entries();
  out.sum = std::real(s.trace());
  out.sum_sq = s.cwiseAbs2().sum();
  out.dispersion = std::max(out.sum_sq - out.sum * out.sum / static_cast<double>(p), 0.0);
  if (need_log && out.sum > 0.0) {
    Eigen::LLT<Matrix> llt(s);
    bool ok = llt.info() == Eigen::Success;
    double log_det = 0.0;
    if (ok) {
      const double max_diag = s.diagonal().real().maxCoeff();
      const auto& l = llt.matrixLLT();
      for (Index i = 0; i < p; ++i) {
        const double pivot = detail::abs2(l(i, i));
        if (!(pivot > 1e-8 * max_diag)) {
          ok = false;
          break;
        }
        log_det += std::log(pivot);
      }
    }
    if (ok) {
      out.log_ratio_sum = log_det - static_cast<double>(p) * std::log(out.mean());
    } else {
      out.log_ratio_sum = summarize(eigenvalues(cov)).log_ratio_sum;
    }
  }
  return out;
}

}  // namespace sphericity
