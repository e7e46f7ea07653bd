#pragma once

// Marchenko-Pastur functionals used as centering terms, for the null
// population and for spiked populations (expansions up to O(1/p^2)).

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "sphericity/corrected.hpp"
#include "sphericity/errors.hpp"

namespace sphericity {

struct Spike {
  double value = 1.0;
  int multiplicity = 1;
};

/// Population eigenvalues all equal to 1 except spikes a_i with multiplicity n_i.
/// An empty model is the null hypothesis.
class SpikedModel {
 public:
  SpikedModel() = default;
  explicit SpikedModel(std::vector<Spike> spikes) : spikes_(std::move(spikes)) {
    for (const auto& s : spikes_) {
      if (!(s.value > 0.0) || !std::isfinite(s.value)) {
        throw DomainError("spike values must be positive and finite");
      }
      if (s.multiplicity < 1) throw DomainError("spike multiplicities must be >= 1");
    }
  }

  static SpikedModel single(double value, int multiplicity = 1) {
    return SpikedModel({{value, multiplicity}});
  }

  [[nodiscard]] const std::vector<Spike>& spikes() const noexcept { return spikes_; }
  [[nodiscard]] bool empty() const noexcept { return spikes_.empty(); }

  /// M = sum of multiplicities.
  [[nodiscard]] int total_multiplicity() const noexcept {
    int m = 0;
    for (const auto& s : spikes_) m += s.multiplicity;
    return m;
  }

  /// sum_i n_i g(a_i).
  template <class F>
  [[nodiscard]] double weighted_sum(F&& g) const {
    double acc = 0.0;
    for (const auto& s : spikes_) acc += s.multiplicity * g(s.value);
    return acc;
  }

 private:
  std::vector<Spike> spikes_;
};

/// Integral of log x against the Marchenko-Pastur law F^y: ((y-1)/y) log(1-y) - 1.
[[nodiscard]] inline double mp_integral_log(double y) {
  if (!(y > 0.0 && y < 1.0)) {
    throw DomainError("log moment of the Marchenko-Pastur law needs 0 < y < 1, got " +
                      std::to_string(y));
  }
  return (y - 1.0) / y * std::log1p(-y) - 1.0;
}

/// Integral of x against F^y, which is 1 for every y > 0.
[[nodiscard]] inline double mp_integral_identity(double y) {
  if (!(y > 0.0)) throw DomainError("Marchenko-Pastur index must be positive");
  return 1.0;
}

/// Integral of x^2 against F^y: 1 + y.
[[nodiscard]] inline double mp_integral_square(double y) {
  if (!(y > 0.0)) throw DomainError("Marchenko-Pastur index must be positive");
  return 1.0 + y;
}

/// F^{y_n}(log x) for a spiked population, remainder O(p^-2) dropped:
/// p^-1 sum n_i log a_i - 1 + (1 - 1/y_n) log(1 - y_n).
[[nodiscard]] inline double spiked_centering_log(const DimensionRatio& ratio, const SpikedModel& s) {
  const double y = ratio.y();
  if (!(y < 1.0)) throw DomainError("log centering needs y_n < 1");
  const double p = static_cast<double>(ratio.p());
  return mp_integral_log(y) + s.weighted_sum([](double a) { return std::log(a); }) / p;
}

/// F^{y_n}(x) for a spiked population: 1 + p^-1 sum n_i a_i - M/p.
[[nodiscard]] inline double spiked_centering_x(const DimensionRatio& ratio, const SpikedModel& s) {
  const double p = static_cast<double>(ratio.p());
  // sum n_i a_i - M written as sum n_i (a_i - 1) so unit spikes cancel exactly.
  return 1.0 + s.weighted_sum([](double a) { return a - 1.0; }) / p;
}

/// F^{y_n}(x^2) for a spiked population:
/// (2/n) sum n_i a_i - 2M/n + 1 + y_n - M/p + p^-1 sum n_i a_i^2.
[[nodiscard]] inline double spiked_centering_x2(const DimensionRatio& ratio, const SpikedModel& s) {
  const double p = static_cast<double>(ratio.p());
  const double n = static_cast<double>(ratio.effective_n());
  const double shift_a = s.weighted_sum([](double a) { return a - 1.0; });
  const double shift_a2 = s.weighted_sum([](double a) { return a * a - 1.0; });
  return mp_integral_square(ratio.y()) + 2.0 * shift_a / n + shift_a2 / p;
}

}  // namespace sphericity
