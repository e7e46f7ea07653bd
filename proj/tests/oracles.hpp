#pragma once

// Independent reference implementations used only by the tests. None of
// these share code with the library: they use long double series,
// hand-written Jacobi rotations and plain quadrature rules.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using real = long double;

inline constexpr real kPi = 3.141592653589793238462643383279502884L;

/// Phi(x) from the Taylor series Phi(x) = 1/2 + phi(x) sum x^(2k+1)/(2k+1)!!.
/// Accurate for |x| <= 8 in long double.
inline real normal_cdf(real x) {
  real term = x;
  real sum = x;
  for (int k = 1; k < 400; ++k) {
    term *= x * x / (2 * k + 1);
    sum += term;
    if (std::fabs(term) < 1e-30L * std::fabs(sum)) break;
  }
  return 0.5L + sum * std::exp(-x * x / 2) / std::sqrt(2 * kPi);
}

/// Upper bound of the Mills ratio: 1 - Phi(x) <= phi(x) / x for x > 0.
inline real normal_tail_bound(real x) { return std::exp(-x * x / 2) / std::sqrt(2 * kPi) / x; }

/// Phi^-1(q) by bisection on the series.
inline real normal_quantile(real q) {
  real lo = -8;
  real hi = 8;
  for (int i = 0; i < 200; ++i) {
    const real mid = (lo + hi) / 2;
    (normal_cdf(mid) < q ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

/// Regularized lower incomplete gamma P(a, x): series below a + 1,
/// Lentz continued fraction for Q above.
inline real gamma_p(real a, real x) {
  if (x <= 0) return 0;
  const real log_prefix = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1) {
    real term = 1 / a;
    real sum = term;
    for (int k = 1; k < 100000; ++k) {
      term *= x / (a + k);
      sum += term;
      if (term < sum * 1e-22L) break;
    }
    return sum * std::exp(log_prefix);
  }
  const real tiny = 1e-300L;
  real b = x + 1 - a;
  real c = 1 / tiny;
  real d = 1 / b;
  real h = d;
  for (int i = 1; i < 100000; ++i) {
    const real an = -i * (i - a);
    b += 2;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1 / d;
    const real delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1) < 1e-22L) break;
  }
  return 1 - std::exp(log_prefix) * h;
}

inline real chisq_cdf(real x, real f) { return gamma_p(f / 2, x / 2); }

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
inline std::vector<real> jacobi_eigenvalues(std::vector<std::vector<real>> a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    real off = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    }
    if (off < 1e-40L) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0) continue;
        const real theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const real t = (theta >= 0 ? 1 : -1) / (std::fabs(theta) + std::sqrt(theta * theta + 1));
        const real c = 1 / std::sqrt(t * t + 1);
        const real s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const real akp = a[k][p];
          const real akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const real apk = a[p][k];
          const real aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<real> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i][i];
  std::sort(out.begin(), out.end());
  return out;
}

/// Composite Gauss-Legendre (5 nodes per panel) on [a, b].
inline real integrate(const std::function<real(real)>& f, real a, real b, int panels = 2000) {
  static const real x[5] = {0.0L, 0.5384693101056830910363144207002088L,
                            -0.5384693101056830910363144207002088L,
                            0.9061798459386639927976268782993930L,
                            -0.9061798459386639927976268782993930L};
  static const real w[5] = {0.5688888888888888888888888888888889L,
                            0.4786286704993664680412915148356382L,
                            0.4786286704993664680412915148356382L,
                            0.2369268850561890875142640407199174L,
                            0.2369268850561890875142640407199174L};
  const real hstep = (b - a) / panels;
  real sum = 0;
  for (int i = 0; i < panels; ++i) {
    const real mid = a + (i + 0.5L) * hstep;
    for (int k = 0; k < 5; ++k) sum += w[k] * f(mid + x[k] * hstep / 2);
  }
  return sum * hstep / 2;
}

/// Integral of g against the Marchenko-Pastur law F^y (atom 1 - 1/y at zero
/// when y > 1, weighted by g(0)). With x = 1 + y - 2 sqrt(y) cos(t) the
/// density integral becomes (2/pi) int_0^pi g(x) sin^2(t) / x dt.
inline real mp_integral(const std::function<real(real)>& g, real y, real g_at_zero = 0) {
  const real h = std::sqrt(y);
  const real bulk = integrate(
      [&](real t) {
        const real x = 1 + y - 2 * h * std::cos(t);
        const real s = std::sin(t);
        return g(x) * s * s / x;
      },
      0, kPi);
  real out = 2 / kPi * bulk;
  if (y > 1) out += (1 - 1 / y) * g_at_zero;
  return out;
}

/// Laurent coefficient c_m of f(|1 + h xi|^2) on the unit circle for the
/// three catalogued integrands (0 = log, 1 = x, 2 = x^2).
inline real laurent(int kind, int m, real h) {
  const int a = m < 0 ? -m : m;
  switch (kind) {
    case 0:
      if (a == 0) return 0;
      return ((a % 2 == 1) ? 1 : -1) * std::pow(h, static_cast<real>(a)) / a;
    case 1:
      if (a == 0) return 1 + h * h;
      return a == 1 ? h : 0;
    default: {
      const real h2 = h * h;
      if (a == 0) return (1 + h2) * (1 + h2) + 2 * h2;
      if (a == 1) return 2 * h * (1 + h2);
      return a == 2 ? h2 : 0;
    }
  }
}

/// I1(f, r) = sum_{k>=1} r^-2k c_2k(f).
inline real series_i1(int kind, real y, real r, int terms = 4000) {
  const real h = std::sqrt(y);
  real s = 0;
  for (int k = 1; k <= terms; ++k) s += std::pow(r, static_cast<real>(-2 * k)) * laurent(kind, 2 * k, h);
  return s;
}

/// J1(f, g, r) = sum_{m>=1} m r^-(m+1) c_-m(f) c_m(g).
inline real series_j1(int f, int g, real y, real r, int terms = 4000) {
  const real h = std::sqrt(y);
  real s = 0;
  for (int m = 1; m <= terms; ++m) {
    s += m * std::pow(r, static_cast<real>(-(m + 1))) * laurent(f, -m, h) * laurent(g, m, h);
  }
  return s;
}

}  // namespace oracle
