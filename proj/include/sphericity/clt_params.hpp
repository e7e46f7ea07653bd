#pragma once

// Limiting mean and covariance of linear spectral statistics of a sample
// covariance matrix with general fourth moments:
//
//   E[X_f]        = (kappa - 1) I1(f) + beta I2(f)
//   Cov(X_f, X_g) = kappa J1(f, g) + beta J2(f, g)
//
// The four integrals are contour integrals over the unit circle, with
// integrands f(|1 + h xi|^2), h = sqrt(y). This header provides their closed
// forms for f in {log x, x, x^2} and a numerical quadrature of the same
// contour integrals for arbitrary integrands.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include "sphericity/corrected.hpp"
#include "sphericity/errors.hpp"

namespace sphericity {

enum class IntegrandTag { kLog, kId, kSquare, kCustom };

/// A test function of a linear spectral statistic: log x, x, x^2 or a custom
/// callable. Custom callables must be finite on [(1 - h)^2, (1 + h)^2] and safe
/// to call concurrently.
class Integrand {
 public:
  static Integrand log() { return Integrand(IntegrandTag::kLog, "log"); }
  static Integrand id() { return Integrand(IntegrandTag::kId, "x"); }
  static Integrand square() { return Integrand(IntegrandTag::kSquare, "x^2"); }
  static Integrand custom(std::string name, std::function<double(double)> fn) {
    Integrand f(IntegrandTag::kCustom, std::move(name));
    f.fn_ = std::move(fn);
    return f;
  }

  [[nodiscard]] IntegrandTag tag() const noexcept { return tag_; }
  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] bool has_closed_form() const noexcept { return tag_ != IntegrandTag::kCustom; }

  [[nodiscard]] double operator()(double x) const {
    switch (tag_) {
      case IntegrandTag::kLog: return std::log(x);
      case IntegrandTag::kId: return x;
      case IntegrandTag::kSquare: return x * x;
      case IntegrandTag::kCustom: return fn_(x);
    }
    return 0.0;
  }

 private:
  Integrand(IntegrandTag tag, std::string name) : tag_(tag), name_(std::move(name)) {}

  IntegrandTag tag_;
  std::string name_;
  std::function<double(double)> fn_;
};

/// Mean vector and covariance matrix of a Gaussian limit.
struct LimitLaw {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Exact closed forms for the polynomial integrands x and x^2, written over a
/// generic field T so they can be evaluated in rational arithmetic.
namespace exact {

template <class T>
[[nodiscard]] T i1(IntegrandTag f, const T& y, const T& r) {
  switch (f) {
    case IntegrandTag::kId: return T(0);
    case IntegrandTag::kSquare: return y / (r * r);
    default: throw DomainError("exact::i1 covers x and x^2 only");
  }
}

template <class T>
[[nodiscard]] T i2(IntegrandTag f, const T& y) {
  switch (f) {
    case IntegrandTag::kId: return T(0);
    case IntegrandTag::kSquare: return y;
    default: throw DomainError("exact::i2 covers x and x^2 only");
  }
}

template <class T>
[[nodiscard]] T j1(IntegrandTag f, IntegrandTag g, const T& y, const T& r) {
  const bool f_sq = f == IntegrandTag::kSquare;
  const bool g_sq = g == IntegrandTag::kSquare;
  for (auto t : {f, g}) {
    if (t != IntegrandTag::kId && t != IntegrandTag::kSquare) {
      throw DomainError("exact::j1 covers x and x^2 only");
    }
  }
  if (f_sq && g_sq) {
    const T one_plus_y = T(1) + y;
    return (T(2) * y * y + T(4) * y * one_plus_y * one_plus_y * r) / (r * r * r);
  }
  if (f_sq || g_sq) return (T(2) * y + T(2) * y * y) / (r * r);
  return y / (r * r);
}

template <class T>
[[nodiscard]] T j2(IntegrandTag f, IntegrandTag g, const T& y) {
  for (auto t : {f, g}) {
    if (t != IntegrandTag::kId && t != IntegrandTag::kSquare) {
      throw DomainError("exact::j2 covers x and x^2 only");
    }
  }
  const T one_plus_y = T(1) + y;
  const bool f_sq = f == IntegrandTag::kSquare;
  const bool g_sq = g == IntegrandTag::kSquare;
  if (f_sq && g_sq) return T(4) * y * one_plus_y * one_plus_y;
  if (f_sq || g_sq) return T(2) * y * one_plus_y;
  return y;
}

}  // namespace exact

namespace detail {

inline void check_closed(const Integrand& f) {
  if (!f.has_closed_form()) {
    throw DomainError("no closed form for custom integrand '" + f.name() +
                      "'; use numeric_contour_params");
  }
}

inline void check_log_domain(double y, double bound, const char* what) {
  if (!(bound < 1.0)) {
    throw DomainError(std::string(what) + ": log integrand needs y < r (got y = " +
                      std::to_string(y) + ")");
  }
}

inline void check_y(double y) {
  if (!(y > 0.0) || !std::isfinite(y)) throw DomainError("dimension ratio y must be positive");
}

inline void check_r(double r) {
  if (!(r >= 1.0) || !std::isfinite(r)) throw DomainError("contour radius r must be >= 1");
}

}  // namespace detail

/// I1(f, r); the limit I1(f) is the value at r = 1.
[[nodiscard]] inline double closed_i1(const Integrand& f, double y, double r = 1.0) {
  detail::check_closed(f);
  detail::check_y(y);
  detail::check_r(r);
  if (f.tag() == IntegrandTag::kLog) {
    detail::check_log_domain(y, y / (r * r), "I1");
    return 0.5 * std::log1p(-y / (r * r));
  }
  return exact::i1(f.tag(), y, r);
}

[[nodiscard]] inline double closed_i2(const Integrand& f, double y) {
  detail::check_closed(f);
  detail::check_y(y);
  if (f.tag() == IntegrandTag::kLog) return -0.5 * y;
  return exact::i2(f.tag(), y);
}

/// J1(f, g, r); the limit J1(f, g) is the value at r = 1.
///
/// The (log, x^2) entry, 2y(1 + y)/r^2 - y^2/r^3, follows from the same
/// residue calculus as the other entries.
[[nodiscard]] inline double closed_j1(const Integrand& f, const Integrand& g, double y,
                                      double r = 1.0) {
  detail::check_closed(f);
  detail::check_closed(g);
  detail::check_y(y);
  detail::check_r(r);
  const bool f_log = f.tag() == IntegrandTag::kLog;
  const bool g_log = g.tag() == IntegrandTag::kLog;
  if (f_log || g_log) detail::check_log_domain(y, y / r, "J1");
  if (f_log && g_log) return -std::log1p(-y / r) / r;
  if (f_log || g_log) {
    const IntegrandTag other = f_log ? g.tag() : f.tag();
    if (other == IntegrandTag::kId) return y / (r * r);
    return (2.0 * y + 2.0 * y * y) / (r * r) - y * y / (r * r * r);
  }
  return exact::j1(f.tag(), g.tag(), y, r);
}

/// Single-contour factor (2 pi i)^-1 \oint f(|1 + h xi|^2) xi^-2 d xi; J2 is the
/// product of two of them.
[[nodiscard]] inline double closed_j2_factor(const Integrand& f, double y) {
  detail::check_closed(f);
  detail::check_y(y);
  const double h = std::sqrt(y);
  switch (f.tag()) {
    case IntegrandTag::kLog:
    case IntegrandTag::kId: return h;
    case IntegrandTag::kSquare: return 2.0 * h * (1.0 + y);
    case IntegrandTag::kCustom: break;
  }
  return 0.0;
}

[[nodiscard]] inline double closed_j2(const Integrand& f, const Integrand& g, double y) {
  if (f.tag() != IntegrandTag::kLog && g.tag() != IntegrandTag::kLog) {
    detail::check_closed(f);
    detail::check_closed(g);
    detail::check_y(y);
    return exact::j2(f.tag(), g.tag(), y);
  }
  return closed_j2_factor(f, y) * closed_j2_factor(g, y);
}

/// Quadrature settings for the contour integrals.
///
/// The r -> 1 limits of I1 and J1 are taken by polynomial (Richardson)
/// extrapolation in r - 1 over `r_sequence`. With a log integrand I1 is
/// singular at r = sqrt(y) and J1 at r = y, so the radii must stay close to 1
/// relative to 1 - sqrt(y). An empty sequence picks five halving steps
/// r = 1 + d0 2^-k with d0 scaled to that gap (see default_r_sequence).
/// `quadrature_points` must resolve the poles at distance r - 1 from the
/// unit circle: the trapezoid error decays like exp(-N (r - 1)).
struct ContourSpec {
  std::vector<double> r_sequence;
  int quadrature_points = 1 << 17;
  /// Accepted disagreement between the last two extrapolants.
  double extrapolation_tolerance = 1e-6;
  /// Largest y at which a log integrand is accepted.
  double log_max_y = 0.95;

  void validate() const {
    if (r_sequence.empty()) {
      if (quadrature_points < (1 << 16)) {
        throw DomainError("automatic r_sequence needs quadrature_points >= 65536");
      }
    } else if (r_sequence.size() < 2) {
      throw DomainError("contour r_sequence needs at least two radii");
    }
    for (std::size_t i = 0; i < r_sequence.size(); ++i) {
      if (!(r_sequence[i] > 1.0)) throw DomainError("contour radii must exceed 1");
      if (i > 0 && !(r_sequence[i] < r_sequence[i - 1])) {
        throw DomainError("contour radii must be strictly decreasing");
      }
    }
    const int n = quadrature_points;
    if (n < 256 || (n & (n - 1)) != 0) {
      throw DomainError("quadrature_points must be a power of two >= 256");
    }
  }
};

/// Radii used when ContourSpec::r_sequence is empty.
[[nodiscard]] inline std::vector<double> default_r_sequence(double y, bool has_log) {
  double d0 = 0.008;
  if (has_log) d0 = std::clamp(0.1 * (1.0 - std::sqrt(y)), 0.0035, 0.008);
  std::vector<double> r;
  for (int k = 0; k < 5; ++k) r.push_back(1.0 + d0 * std::ldexp(1.0, -k));
  return r;
}

/// Numerical values of I1(f), I2(f), J1(f, g), J2(f, g) with diagnostics.
struct ContourParams {
  double i1 = 0.0;
  double i2 = 0.0;
  double j1 = 0.0;
  double j2 = 0.0;
  /// Largest imaginary part of any quadrature sum (zero in exact arithmetic).
  double imag_residual = 0.0;
  /// Difference between the last two extrapolants of I1 and J1.
  double extrapolation_residual = 0.0;
};

namespace detail {

/// Integrand sampled at xi_k = exp(2 pi i k / N): F_k = f(|1 + h xi_k|^2).
inline std::vector<double> sample_on_circle(const Integrand& f, double y, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  const double h = std::sqrt(y);
  for (int k = 0; k < n; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / n;
    const double x = 1.0 + y + 2.0 * h * std::cos(theta);
    const double v = f(x);
    if (!std::isfinite(v)) {
      throw DomainError("integrand '" + f.name() + "' is not finite on the contour at x = " +
                        std::to_string(x));
    }
    out[static_cast<std::size_t>(k)] = v;
  }
  return out;
}

inline std::complex<double> unit_root(int k, int n) {
  const double theta = 2.0 * std::numbers::pi * k / n;
  return {std::cos(theta), std::sin(theta)};
}

/// Trapezoid rule for (2 pi i)^-1 \oint F(xi) w(xi) d xi on the unit circle.
template <class Weight>
std::complex<double> circle_integral(std::span<const double> samples, Weight&& w) {
  const int n = static_cast<int>(samples.size());
  std::complex<double> acc{0.0, 0.0};
  for (int k = 0; k < n; ++k) {
    const auto xi = unit_root(k, n);
    acc += samples[static_cast<std::size_t>(k)] * w(xi) * xi;
  }
  return acc / static_cast<double>(n);
}

/// C_m = sum_k G_k F_{k+m} (indices mod N), computed with an FFT.
inline std::vector<std::complex<double>> circular_correlation(std::span<const double> f,
                                                              std::span<const double> g) {
  Eigen::FFT<double> fft;
  std::vector<double> fv(f.begin(), f.end());
  std::vector<double> gv(g.begin(), g.end());
  std::vector<std::complex<double>> fh;
  std::vector<std::complex<double>> gh;
  fft.fwd(fh, fv);
  fft.fwd(gh, gv);
  for (std::size_t l = 0; l < fh.size(); ++l) fh[l] *= std::conj(gh[l]);
  std::vector<std::complex<double>> c;
  fft.inv(c, fh);
  return c;
}

/// Tensor-grid trapezoid sum for
/// (2 pi i)^-2 \oint\oint F(xi1) G(xi2) / (xi1 - r xi2)^2 d xi1 d xi2,
/// reorganized over m = j - k so it costs one correlation plus O(N) per r.
inline std::complex<double> j1_from_correlation(std::span<const std::complex<double>> corr,
                                                double r) {
  const int n = static_cast<int>(corr.size());
  std::complex<double> acc{0.0, 0.0};
  for (int m = 0; m < n; ++m) {
    const auto xi = unit_root(m, n);
    const auto d = xi - r;
    acc += corr[static_cast<std::size_t>(m)] * xi / (d * d);
  }
  return acc / (static_cast<double>(n) * static_cast<double>(n));
}

/// Direct O(N^2) version of the same double sum; reference for small N.
inline std::complex<double> j1_tensor_sum(std::span<const double> f, std::span<const double> g,
                                          double r) {
  const int n = static_cast<int>(f.size());
  std::complex<double> acc{0.0, 0.0};
  for (int k = 0; k < n; ++k) {
    const auto xi2 = unit_root(k, n);
    std::complex<double> inner{0.0, 0.0};
    for (int j = 0; j < n; ++j) {
      const auto xi1 = unit_root(j, n);
      const auto d = xi1 - r * xi2;
      inner += f[static_cast<std::size_t>(j)] * xi1 / (d * d);
    }
    acc += g[static_cast<std::size_t>(k)] * xi2 * inner / static_cast<double>(n);
  }
  return acc / static_cast<double>(n);
}

struct Extrapolation {
  double value = 0.0;
  double residual = 0.0;
};

/// Value at d = 0 of the polynomial through (nodes[i], values[i]) (Neville).
inline double neville_at_zero(std::span<const double> nodes, std::span<const double> values) {
  std::vector<double> t(values.begin(), values.end());
  const std::size_t k = t.size();
  for (std::size_t level = 1; level < k; ++level) {
    for (std::size_t i = 0; i + level < k; ++i) {
      const double di = nodes[i];
      const double dj = nodes[i + level];
      t[i] = (dj * t[i] - di * t[i + 1]) / (dj - di);
    }
  }
  return t[0];
}

/// Extrapolates to d = 0 and reports the change from dropping the last node.
inline Extrapolation extrapolate_to_zero(std::span<const double> nodes,
                                         std::span<const double> values) {
  const double all = neville_at_zero(nodes, values);
  const double fewer = neville_at_zero(nodes.first(nodes.size() - 1), values.first(values.size() - 1));
  return {all, std::abs(all - fewer)};
}

}  // namespace detail

/// Contour-quadrature evaluation of I1(f), I2(f), J1(f, g), J2(f, g).
///
/// Every integral is the trapezoid rule in theta over xi = exp(i theta), which
/// converges geometrically for these periodic analytic integrands. The J1
/// double integral is the N x N tensor-grid rule, evaluated through a
/// circular correlation.
///
/// Throws DomainError for log integrands above spec.log_max_y (the log
/// singularity at xi = -1/h approaches the contour) and AccuracyError when the
/// r -> 1 extrapolation has not settled to spec.extrapolation_tolerance.
[[nodiscard]] inline ContourParams numeric_contour_params(const Integrand& f, const Integrand& g,
                                                          double y, const ContourSpec& spec = {}) {
  spec.validate();
  detail::check_y(y);
  for (const auto* fn : {&f, &g}) {
    if (fn->tag() == IntegrandTag::kLog && y > spec.log_max_y) {
      throw DomainError("log integrand: contour quadrature is restricted to y <= " +
                        std::to_string(spec.log_max_y) + " (got y = " + std::to_string(y) + ")");
    }
  }
  const int n = spec.quadrature_points;
  const auto fs = detail::sample_on_circle(f, y, n);
  const auto gs = detail::sample_on_circle(g, y, n);

  ContourParams out;
  auto track = [&out](std::complex<double> v) {
    out.imag_residual = std::max(out.imag_residual, std::abs(v.imag()));
    return v.real();
  };

  out.i2 = track(detail::circle_integral(fs, [](std::complex<double> xi) {
    return 1.0 / (xi * xi * xi);
  }));
  const double sf = track(detail::circle_integral(fs, [](std::complex<double> xi) {
    return 1.0 / (xi * xi);
  }));
  const double sg = track(detail::circle_integral(gs, [](std::complex<double> xi) {
    return 1.0 / (xi * xi);
  }));
  out.j2 = sf * sg;

  const auto corr = detail::circular_correlation(fs, gs);
  std::vector<double> nodes;
  std::vector<double> i1_values;
  std::vector<double> j1_values;
  const bool has_log = f.tag() == IntegrandTag::kLog || g.tag() == IntegrandTag::kLog;
  const auto radii = spec.r_sequence.empty() ? default_r_sequence(y, has_log) : spec.r_sequence;
  for (double r : radii) {
    const double inv_r2 = 1.0 / (r * r);
    nodes.push_back(r - 1.0);
    i1_values.push_back(track(detail::circle_integral(fs, [inv_r2](std::complex<double> xi) {
      return xi / (xi * xi - inv_r2) - 1.0 / xi;
    })));
    j1_values.push_back(track(detail::j1_from_correlation(corr, r)));
  }
  const auto i1 = detail::extrapolate_to_zero(nodes, i1_values);
  const auto j1 = detail::extrapolate_to_zero(nodes, j1_values);
  out.i1 = i1.value;
  out.j1 = j1.value;
  out.extrapolation_residual = std::max(i1.residual, j1.residual);
  if (out.extrapolation_residual > spec.extrapolation_tolerance) {
    throw AccuracyError("r -> 1 extrapolation did not converge for (" + f.name() + ", " + g.name() +
                            ") at y = " + std::to_string(y),
                        out.extrapolation_residual);
  }
  return out;
}

/// Gaussian limit of (X_{f_1}, ..., X_{f_k}), X_f = p (F_n(f) - F^{y_n}(f)).
/// Closed forms are used where available and contour quadrature otherwise.
[[nodiscard]] inline LimitLaw assemble_limit_law(std::span<const Integrand> fs, double y,
                                                 const MomentProfile& m,
                                                 const ContourSpec& spec = {}) {
  const auto k = static_cast<Index>(fs.size());
  LimitLaw law{Eigen::VectorXd::Zero(k), Eigen::MatrixXd::Zero(k, k)};
  const double kappa = m.kappa();
  const double beta = m.beta();
  for (Index i = 0; i < k; ++i) {
    const auto& fi = fs[static_cast<std::size_t>(i)];
    for (Index j = i; j < k; ++j) {
      const auto& fj = fs[static_cast<std::size_t>(j)];
      double i1 = 0.0;
      double i2 = 0.0;
      double j1 = 0.0;
      double j2 = 0.0;
      if (fi.has_closed_form() && fj.has_closed_form()) {
        i1 = closed_i1(fi, y);
        i2 = closed_i2(fi, y);
        j1 = closed_j1(fi, fj, y);
        j2 = closed_j2(fi, fj, y);
      } else {
        const auto c = numeric_contour_params(fi, fj, y, spec);
        i1 = c.i1;
        i2 = c.i2;
        j1 = c.j1;
        j2 = c.j2;
      }
      if (i == j) law.mean(i) = (kappa - 1.0) * i1 + beta * i2;
      law.cov(i, j) = kappa * j1 + beta * j2;
      law.cov(j, i) = law.cov(i, j);
    }
  }
  return law;
}

[[nodiscard]] inline LimitLaw assemble_limit_law(std::initializer_list<Integrand> fs, double y,
                                                 const MomentProfile& m,
                                                 const ContourSpec& spec = {}) {
  const std::vector<Integrand> v(fs);
  return assemble_limit_law(std::span<const Integrand>(v), y, m, spec);
}

}  // namespace sphericity
