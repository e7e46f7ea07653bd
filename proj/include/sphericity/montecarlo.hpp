#pragma once

// Monte Carlo estimation of empirical size and power.
//
// Every replication draws from its own std::mt19937_64 whose seed is a
// bijective mix of (master seed, cell, replication index), so results do not
// depend on how replications are spread over worker threads.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <exception>
#include <iterator>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "sphericity/classical.hpp"
#include "sphericity/corrected.hpp"
#include "sphericity/errors.hpp"
#include "sphericity/mp_centering.hpp"
#include "sphericity/numerics.hpp"
#include "sphericity/spectra.hpp"

namespace sphericity {

enum class Distribution { kStandardNormal, kGammaShifted };

/// Entry distribution of the simulated data. The shifted gamma is
/// Gamma(shape 4, rate 2) - 2: mean 0, variance 1, fourth moment 4.5.
class Scenario {
 public:
  constexpr Scenario() = default;
  constexpr explicit Scenario(Distribution d) : distribution_(d) {}

  static constexpr Scenario normal() { return Scenario(Distribution::kStandardNormal); }
  static constexpr Scenario gamma() { return Scenario(Distribution::kGammaShifted); }

  [[nodiscard]] constexpr Distribution distribution() const noexcept { return distribution_; }

  [[nodiscard]] MomentProfile moments() const {
    return distribution_ == Distribution::kStandardNormal ? MomentProfile(2, 0.0)
                                                          : MomentProfile(2, 1.5);
  }

  [[nodiscard]] std::string name() const {
    return distribution_ == Distribution::kStandardNormal ? "normal" : "gamma";
  }

  friend constexpr bool operator==(Scenario, Scenario) = default;

 private:
  Distribution distribution_ = Distribution::kStandardNormal;
};

[[nodiscard]] inline Scenario parse_scenario(std::string_view s) {
  if (s == "normal") return Scenario::normal();
  if (s == "gamma") return Scenario::gamma();
  throw ConfigurationError("unknown scenario '" + std::string(s) + "' (expected normal|gamma)");
}

enum class DesignKind { kNull, kHalfHalf, kQuarter, kSpiked };

/// Diagonal population covariance used to generate data.
class AlternativeDesign {
 public:
  AlternativeDesign() = default;

  static AlternativeDesign null_design() { return AlternativeDesign(DesignKind::kNull, {}); }
  /// First floor(p/2) variances 0.5, the rest 1.
  static AlternativeDesign half_half() { return AlternativeDesign(DesignKind::kHalfHalf, {}); }
  /// First floor(p/4) variances 0.5, the rest 1.
  static AlternativeDesign quarter() { return AlternativeDesign(DesignKind::kQuarter, {}); }
  /// Leading variances a_i with multiplicity n_i, the rest 1.
  static AlternativeDesign spiked(SpikedModel s) {
    return AlternativeDesign(DesignKind::kSpiked, std::move(s));
  }

  [[nodiscard]] DesignKind kind() const noexcept { return kind_; }
  [[nodiscard]] const SpikedModel& spikes() const noexcept { return spikes_; }

  [[nodiscard]] std::vector<double> diagonal(Index p) const {
    std::vector<double> d(static_cast<std::size_t>(p), 1.0);
    auto fill_leading = [&](Index count, double v) {
      std::fill_n(d.begin(), std::min(count, p), v);
    };
    switch (kind_) {
      case DesignKind::kNull: break;
      case DesignKind::kHalfHalf: fill_leading(p / 2, 0.5); break;
      case DesignKind::kQuarter: fill_leading(p / 4, 0.5); break;
      case DesignKind::kSpiked: {
        if (spikes_.total_multiplicity() > p) {
          throw ConfigurationError("spike multiplicities exceed the dimension");
        }
        std::size_t i = 0;
        for (const auto& s : spikes_.spikes()) {
          for (int k = 0; k < s.multiplicity; ++k) d[i++] = s.value;
        }
        break;
      }
    }
    return d;
  }

  [[nodiscard]] std::string name() const {
    switch (kind_) {
      case DesignKind::kNull: return "null";
      case DesignKind::kHalfHalf: return "half";
      case DesignKind::kQuarter: return "quarter";
      case DesignKind::kSpiked: {
        std::string out = "spiked(";
        bool first = true;
        for (const auto& s : spikes_.spikes()) {
          if (!first) out += '+';
          first = false;
          char buf[64];
          std::snprintf(buf, sizeof buf, "%g:%d", s.value, s.multiplicity);
          out += buf;
        }
        return out + ")";
      }
    }
    return "?";
  }

 private:
  AlternativeDesign(DesignKind kind, SpikedModel s) : kind_(kind), spikes_(std::move(s)) {}

  DesignKind kind_ = DesignKind::kNull;
  SpikedModel spikes_;
};

/// Where CJ and CLRT take beta from. kAuto estimates it under the gamma
/// scenario and uses the true value 0 under the normal one.
enum class BetaSource { kAuto, kEstimated, kTrue };

[[nodiscard]] inline std::string to_string(BetaSource b) {
  switch (b) {
    case BetaSource::kAuto: return "auto";
    case BetaSource::kEstimated: return "estimated";
    case BetaSource::kTrue: return "true";
  }
  return "?";
}

struct ExperimentReport {
  TestId test = TestId::kCj;
  Scenario scenario;
  AlternativeDesign design;
  Index p = 0;
  Index n = 0;
  int reps = 0;
  Probability alpha;
  Probability rejection_rate;
  double monte_carlo_stderr = 0.0;
  std::uint64_t master_seed = 0;
  MeanConvention convention = MeanConvention::kKnown;
  BetaSource beta_source = BetaSource::kAuto;
};

struct RunOptions {
  Probability alpha{0.05};
  MeanConvention convention = MeanConvention::kKnown;
  BetaSource beta_source = BetaSource::kAuto;
  /// 0 means std::thread::hardware_concurrency().
  unsigned workers = 0;
};

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// splitmix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) noexcept {
  return mix64(h + kGolden * (v + 1));
}

inline std::uint64_t cell_key(Scenario scenario, const AlternativeDesign& design, Index p, Index n) {
  std::uint64_t h = combine(0, static_cast<std::uint64_t>(scenario.distribution()));
  h = combine(h, static_cast<std::uint64_t>(design.kind()));
  for (const auto& s : design.spikes().spikes()) {
    h = combine(h, std::bit_cast<std::uint64_t>(s.value));
    h = combine(h, static_cast<std::uint64_t>(s.multiplicity));
  }
  h = combine(h, static_cast<std::uint64_t>(p));
  return combine(h, static_cast<std::uint64_t>(n));
}

}  // namespace detail

/// Seed of replication `rep` of a cell; injective in `rep` for a fixed cell.
[[nodiscard]] constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t cell,
                                                  std::uint64_t rep) noexcept {
  const std::uint64_t base = detail::mix64(detail::mix64(master) ^ cell);
  return detail::mix64(base + rep * detail::kGolden);
}

/// p x n data: iid entries from the scenario, row i scaled by sqrt(Sigma_ii).
[[nodiscard]] inline DataMatrix sample_data(Scenario scenario, const AlternativeDesign& design,
                                            Index p, Index n, std::uint64_t seed) {
  if (p < 1 || n < 1) throw DomainError("dimension and sample size must be positive");
  const auto diag = design.diagonal(p);
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd x(p, n);
  if (scenario.distribution() == Distribution::kStandardNormal) {
    std::normal_distribution<double> dist;
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < p; ++i) x(i, j) = dist(rng);
    }
  } else {
    std::gamma_distribution<double> dist(4.0, 0.5);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < p; ++i) x(i, j) = dist(rng) - 2.0;
    }
  }
  for (Index i = 0; i < p; ++i) {
    const double d = diag[static_cast<std::size_t>(i)];
    if (d != 1.0) x.row(i) *= std::sqrt(d);
  }
  return DataMatrix(std::move(x));
}

namespace detail {

inline bool needs_log(TestId t) {
  return t == TestId::kLrt || t == TestId::kBblrt || t == TestId::kClrt;
}

inline bool uses_beta(TestId t) { return t == TestId::kCj || t == TestId::kClrt; }

inline void check_applicable(TestId t, Index p, Index n, MeanConvention c) {
  const Index eff = effective_samples(n, c);
  if (needs_log(t) && p >= eff) {
    throw ConfigurationError(std::string(to_string(t)) + " needs p < N (p = " + std::to_string(p) +
                             ", N = " + std::to_string(eff) + ")");
  }
  if (eff < 1) throw ConfigurationError("unknown-mean calibration needs n >= 2");
}

inline TestOutcome run_test(TestId t, const SpectralSummary& s, const MomentProfile& m) {
  switch (t) {
    case TestId::kLrt: return lrt_test(s);
    case TestId::kBblrt: return bblrt_test(s);
    case TestId::kJohn: return john_chisq_test(s);
    case TestId::kNagao: return nagao_test(s);
    case TestId::kClrt: return clrt_test(s, m);
    case TestId::kCj: return cj_test(s, m);
    case TestId::kLw: return lw_test(s);
  }
  throw ConfigurationError("unknown test");
}

}  // namespace detail

/// Runs several tests on common replications of one (scenario, design, p, n)
/// cell; one report per test, in the order given.
[[nodiscard]] inline std::vector<ExperimentReport> run_experiment(
    std::span<const TestId> tests, Scenario scenario, const AlternativeDesign& design, Index p,
    Index n, int reps, std::uint64_t master_seed, const RunOptions& opts = {}) {
  if (reps < 1) throw ConfigurationError("reps must be >= 1");
  if (tests.empty()) throw ConfigurationError("no tests requested");
  if (p < 1 || n < 1) throw ConfigurationError("p and n must be positive");
  for (auto t : tests) detail::check_applicable(t, p, n, opts.convention);
  (void)design.diagonal(p);

  bool need_log = false;
  bool need_beta_hat = false;
  const bool estimate = opts.beta_source == BetaSource::kEstimated ||
                        (opts.beta_source == BetaSource::kAuto &&
                         scenario.distribution() == Distribution::kGammaShifted);
  for (auto t : tests) {
    need_log = need_log || detail::needs_log(t);
    need_beta_hat = need_beta_hat || (detail::uses_beta(t) && estimate);
  }
  const MomentProfile truth = scenario.moments();
  const std::uint64_t cell = detail::cell_key(scenario, design, p, n);
  const std::size_t k = tests.size();
  std::vector<unsigned char> rejected(k * static_cast<std::size_t>(reps), 0);

  auto replicate = [&](int rep) {
    const auto data = sample_data(scenario, design, p, n, stream_seed(master_seed, cell, rep));
    const auto summary = summarize_data(data, opts.convention, need_log);
    MomentProfile m = truth;
    if (need_beta_hat) {
      const double b = estimate_beta(data, truth.kappa(), opts.convention);
      m = MomentProfile(truth.kappa(), std::max(b, -static_cast<double>(truth.kappa())));
    }
    for (std::size_t t = 0; t < k; ++t) {
      const auto outcome = detail::run_test(tests[t], summary, m);
      rejected[t * static_cast<std::size_t>(reps) + static_cast<std::size_t>(rep)] =
          outcome.rejects(opts.alpha) ? 1 : 0;
    }
  };

  unsigned workers = opts.workers == 0 ? std::max(1U, std::thread::hardware_concurrency())
                                       : opts.workers;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(reps));
  if (workers <= 1) {
    for (int r = 0; r < reps; ++r) replicate(r);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
      std::vector<std::jthread> pool;
      pool.reserve(workers);
      for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (int r = next++; r < reps; r = next++) {
            try {
              replicate(r);
            } catch (...) {
              std::lock_guard lock(failure_mutex);
              if (!failure) failure = std::current_exception();
              next = reps;
            }
          }
        });
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<ExperimentReport> out;
  out.reserve(k);
  for (std::size_t t = 0; t < k; ++t) {
    const auto begin = rejected.begin() + static_cast<std::ptrdiff_t>(t * static_cast<std::size_t>(reps));
    const long count = std::count(begin, begin + reps, 1);
    const double rate = static_cast<double>(count) / reps;
    ExperimentReport r;
    r.test = tests[t];
    r.scenario = scenario;
    r.design = design;
    r.p = p;
    r.n = n;
    r.reps = reps;
    r.alpha = opts.alpha;
    r.rejection_rate = Probability(rate);
    r.monte_carlo_stderr = std::sqrt(rate * (1.0 - rate) / reps);
    r.master_seed = master_seed;
    r.convention = opts.convention;
    r.beta_source = opts.beta_source;
    out.push_back(std::move(r));
  }
  return out;
}

[[nodiscard]] inline ExperimentReport empirical_rejection(TestId test, Scenario scenario,
                                                          const AlternativeDesign& design, Index p,
                                                          Index n, int reps,
                                                          std::uint64_t master_seed,
                                                          const RunOptions& opts = {}) {
  const TestId one[] = {test};
  return run_experiment(one, scenario, design, p, n, reps, master_seed, opts).front();
}

enum class TableId { kT1 = 1, kT2 = 2, kT3 = 3, kT4 = 4 };

/// One cell of a simulation table: tests evaluated on shared replications.
struct TableCell {
  Scenario scenario;
  AlternativeDesign design;
  Index p = 0;
  Index n = 0;
  std::vector<TestId> tests;
};

[[nodiscard]] inline std::vector<TableCell> table_cells(TableId id) {
  using enum TestId;
  std::vector<TableCell> cells;
  const std::vector<std::pair<Index, Index>> size_grid = {
      {4, 64},    {8, 64},    {16, 64},   {32, 64},   {48, 64},   {56, 64},   {60, 64},
      {8, 128},   {16, 128},  {32, 128},  {64, 128},  {96, 128},  {112, 128}, {120, 128},
      {16, 256},  {32, 256},  {64, 256},  {128, 256}, {192, 256}, {224, 256}, {240, 256},
      {32, 512},  {64, 512},  {128, 512}, {256, 512}, {384, 512}, {448, 512}, {480, 512}};
  switch (id) {
    case TableId::kT1:
      for (Index p : {4, 8, 16, 32, 48, 56, 60}) {
        cells.push_back({Scenario::normal(), AlternativeDesign::null_design(), p, 64, {kBblrt, kNagao}});
      }
      break;
    case TableId::kT2:
      for (auto scenario : {Scenario::normal(), Scenario::gamma()}) {
        for (auto [p, n] : size_grid) {
          cells.push_back({scenario, AlternativeDesign::null_design(), p, n, {kLw, kClrt, kCj}});
        }
      }
      break;
    case TableId::kT3:
      for (auto scenario : {Scenario::normal(), Scenario::gamma()}) {
        for (const auto& design : {AlternativeDesign::half_half(), AlternativeDesign::quarter()}) {
          for (auto [p, n] : size_grid) {
            if (n > 128) continue;
            cells.push_back({scenario, design, p, n, {kLw, kClrt, kCj}});
          }
        }
      }
      break;
    case TableId::kT4:
      for (Index p : {64, 320, 640, 960, 1280}) {
        for (const auto& design : {AlternativeDesign::null_design(), AlternativeDesign::half_half(),
                                   AlternativeDesign::quarter()}) {
          cells.push_back({Scenario::gamma(), design, p, 64, {kCj}});
        }
      }
      break;
  }
  return cells;
}

/// All cells of a table, flattened to one report per (cell, test).
[[nodiscard]] inline std::vector<ExperimentReport> run_table(TableId id, int reps,
                                                             std::uint64_t master_seed,
                                                             const RunOptions& opts = {}) {
  if (reps < 100) throw ConfigurationError("table runs need reps >= 100");
  std::vector<ExperimentReport> out;
  for (const auto& cell : table_cells(id)) {
    auto reports = run_experiment(cell.tests, cell.scenario, cell.design, cell.p, cell.n, reps,
                                  master_seed, opts);
    std::move(reports.begin(), reports.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace sphericity
