#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "csv.hpp"
#include "sphericity/sphericity.hpp"

namespace sphericity::cli {
namespace {

using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double to_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  if (!detail::parse_double(detail::trim(s), v)) {
    throw UsageError("invalid number for " + what + ": '" + s + "'");
  }
  return v;
}

std::uint64_t default_seed() {
  const char* env = std::getenv("SPHERICITY_SEED");
  if (env == nullptr || *env == '\0') return 42;
  std::uint64_t seed = 0;
  const std::string_view s(env);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw UsageError("SPHERICITY_SEED must be an unsigned integer, got '" + std::string(s) + "'");
  }
  return seed;
}

MeanConvention parse_mean(const std::string& s) {
  return s == "unknown" ? MeanConvention::kUnknown : MeanConvention::kKnown;
}

TestId parse_test(const std::string& s) {
  const auto id = parse_test_id(s);
  if (!id) throw UsageError("unknown test '" + s + "'");
  return *id;
}

SpikedModel parse_spikes(const std::string& text) {
  std::vector<Spike> spikes;
  for (auto item : detail::split(text, ',')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    Spike s;
    s.value = to_double(std::string(item.substr(0, colon)), "spike value");
    if (colon != std::string_view::npos) {
      const double m = to_double(std::string(item.substr(colon + 1)), "spike multiplicity");
      if (m != std::floor(m) || m < 1) throw UsageError("spike multiplicity must be a positive integer");
      s.multiplicity = static_cast<int>(m);
    }
    spikes.push_back(s);
  }
  try {
    return SpikedModel(std::move(spikes));
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
}

/// Output sink: a file when --output is given, `fallback` otherwise.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw UsageError("cannot open output file '" + path + "'");
      out_ = file_.get();
    }
  }
  std::ostream& stream() { return *out_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_;
};

bool needs_log(TestId t) {
  return t == TestId::kLrt || t == TestId::kBblrt || t == TestId::kClrt;
}

void check_no_constant_variable(const DataMatrix& data) {
  const auto& x = data.entries();
  for (Index i = 0; i < x.rows(); ++i) {
    if (x.row(i).maxCoeff() == x.row(i).minCoeff()) {
      throw DegenerateSpectrumError("variable " + std::to_string(i + 1) +
                                    " is constant across observations; the sample "
                                    "covariance spectrum is degenerate");
    }
  }
}

// ---------------------------------------------------------------- test

struct TestArgs {
  std::string input;
  std::string output;
  std::string test = "cj";
  double alpha = 0.05;
  int kappa = 2;
  std::string beta = "auto";
  std::string mean = "known";
  bool transpose = false;
  bool json = false;
  bool exit_on_reject = false;
};

int cmd_test(const TestArgs& a, std::ostream& out, std::ostream& err) {
  const TestId id = parse_test(a.test);
  const Probability alpha(a.alpha);
  const MeanConvention conv = parse_mean(a.mean);

  DataMatrix data = [&] {
    if (a.input == "-") return read_csv(std::cin, a.transpose);
    std::ifstream in(a.input);
    if (!in) throw UsageError("cannot open input file '" + a.input + "'");
    return read_csv(in, a.transpose);
  }();
  const Index p = data.dim();
  const Index n = data.samples();
  const Index eff = effective_samples(n, conv);
  if (eff < 1) throw ConfigurationError("unknown-mean tests need at least 2 observations");
  if (needs_log(id) && p >= eff) {
    throw ConfigurationError(std::string(to_string(id)) + " needs p < N; got p = " +
                             std::to_string(p) + ", N = " + std::to_string(eff) +
                             " (use cj, lw, john or nagao when p >= N)");
  }
  check_no_constant_variable(data);

  const bool uses_beta = id == TestId::kCj || id == TestId::kClrt;
  double beta = 0.0;
  bool estimated = false;
  if (uses_beta) {
    if (a.beta == "auto") {
      beta = std::max(estimate_beta(data, a.kappa, conv), -static_cast<double>(a.kappa));
      estimated = true;
    } else {
      beta = to_double(a.beta, "--beta");
    }
  }
  const MomentProfile m(a.kappa, beta);
  const auto summary = summarize_data(data, conv, needs_log(id));
  TestOutcome r;
  switch (id) {
    case TestId::kLrt: r = lrt_test(summary); break;
    case TestId::kBblrt: r = bblrt_test(summary); break;
    case TestId::kJohn: r = john_chisq_test(summary); break;
    case TestId::kNagao: r = nagao_test(summary); break;
    case TestId::kClrt: r = clrt_test(summary, m); break;
    case TestId::kCj: r = cj_test(summary, m); break;
    case TestId::kLw: r = lw_test(summary); break;
  }
  for (const auto& w : r.warnings) err << "warning: " << w << '\n';
  const bool reject = r.rejects(alpha);
  const bool chisq = r.reference == ReferenceKind::kChiSquare;
  const double df = static_cast<double>(p) * (p + 1) / 2.0 - 1.0;

  Sink sink(a.output, out);
  auto& o = sink.stream();
  if (a.json) {
    json j;
    j["test"] = std::string(to_string(id));
    j["p"] = p;
    j["n"] = n;
    j["mean"] = a.mean;
    j["statistic"] = r.statistic;
    j["reference"] = chisq ? "chisq" : "normal";
    j["reference_value"] = r.reference_value;
    if (chisq) j["df"] = df;
    j["p_value"] = r.p_value.value();
    j["alpha"] = alpha.value();
    j["reject"] = reject;
    j["decision"] = reject ? "REJECT" : "NO-REJECT";
    j["clamped"] = r.clamped;
    if (uses_beta) {
      j["kappa"] = a.kappa;
      j["beta"] = beta;
      j["beta_estimated"] = estimated;
    }
    j["warnings"] = r.warnings;
    o << j.dump(2) << '\n';
  } else {
    o << "test        " << to_string(id) << '\n'
      << "p           " << p << '\n'
      << "n           " << n << '\n'
      << "mean        " << a.mean << '\n';
    if (uses_beta) {
      o << "kappa       " << a.kappa << '\n'
        << "beta        " << fmt(beta) << (estimated ? " (estimated)" : "") << '\n';
    }
    o << "statistic   " << fmt(r.statistic) << '\n';
    if (chisq) {
      o << "chi-square  " << fmt(r.reference_value) << " (df " << fmt(df) << ")\n";
    } else {
      o << "z           " << fmt(r.reference_value) << '\n';
    }
    o << "p-value     " << fmt(r.p_value.value()) << (r.clamped ? " (clamped)" : "") << '\n'
      << "alpha       " << fmt(alpha.value()) << '\n'
      << "decision    " << (reject ? "REJECT" : "NO-REJECT") << '\n';
  }
  return reject && a.exit_on_reject ? kExitRejected : kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  int table = 0;
  long p = 0;
  long n = 0;
  std::string tests = "cj";
  std::string scenario = "normal";
  std::string design = "null";
  std::string spikes;
  int reps = 10000;
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;
  double alpha = 0.05;
  std::string mean = "known";
  std::string beta_source = "auto";
  std::string format = "csv";
  std::string output;
};

AlternativeDesign parse_design(const std::string& name, const std::string& spikes) {
  if (name == "null") return AlternativeDesign::null_design();
  if (name == "half") return AlternativeDesign::half_half();
  if (name == "quarter") return AlternativeDesign::quarter();
  if (name == "spiked") {
    if (spikes.empty()) throw UsageError("--design spiked needs --spikes");
    return AlternativeDesign::spiked(parse_spikes(spikes));
  }
  throw UsageError("unknown design '" + name + "' (expected null|half|quarter|spiked)");
}

BetaSource parse_beta_source(const std::string& s) {
  if (s == "auto") return BetaSource::kAuto;
  if (s == "estimated") return BetaSource::kEstimated;
  if (s == "true") return BetaSource::kTrue;
  throw UsageError("unknown beta source '" + s + "'");
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  RunOptions opts;
  opts.alpha = Probability(a.alpha);
  opts.convention = parse_mean(a.mean);
  opts.beta_source = parse_beta_source(a.beta_source);
  opts.workers = a.workers;
  const std::uint64_t seed = a.seed ? *a.seed : default_seed();

  std::vector<ExperimentReport> reports;
  if (a.table != 0) {
    reports = run_table(static_cast<TableId>(a.table), a.reps, seed, opts);
  } else {
    if (a.p < 1 || a.n < 1) throw UsageError("give --table or both --p and --n");
    std::vector<TestId> tests;
    for (auto t : detail::split(a.tests, ',')) tests.push_back(parse_test(std::string(t)));
    const Scenario scenario = parse_scenario(a.scenario);
    const AlternativeDesign design = parse_design(a.design, a.spikes);
    reports = run_experiment(tests, scenario, design, a.p, a.n, a.reps, seed, opts);
  }

  Sink sink(a.output, out);
  auto& o = sink.stream();
  if (a.format == "json") {
    json arr = json::array();
    for (const auto& r : reports) {
      arr.push_back({{"test", std::string(to_string(r.test))},
                     {"scenario", r.scenario.name()},
                     {"design", r.design.name()},
                     {"p", r.p},
                     {"n", r.n},
                     {"reps", r.reps},
                     {"alpha", r.alpha.value()},
                     {"rejection_rate", r.rejection_rate.value()},
                     {"stderr", r.monte_carlo_stderr},
                     {"seed", r.master_seed},
                     {"mean", is_mean_known(r.convention) ? "known" : "unknown"},
                     {"beta_source", to_string(r.beta_source)}});
    }
    o << arr.dump(2) << '\n';
  } else {
    o << "test,scenario,design,p,n,reps,rejection_rate,stderr\n";
    for (const auto& r : reports) {
      o << to_string(r.test) << ',' << r.scenario.name() << ',' << r.design.name() << ',' << r.p
        << ',' << r.n << ',' << r.reps << ',' << fmt(r.rejection_rate.value()) << ','
        << fmt(r.monte_carlo_stderr) << '\n';
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- power

struct PowerArgs {
  std::string test;
  double alpha = 0.05;
  std::string spikes;
  std::string y_grid;
  int kappa = 2;
  std::string output;
};

int cmd_power(const PowerArgs& a, std::ostream& out) {
  const TestId id = parse_test(a.test);
  if (id != TestId::kClrt && id != TestId::kCj) {
    throw UsageError("power curves are available for clrt and cj");
  }
  const auto grid = parse_grid(a.y_grid);
  for (double y : grid) {
    if (id == TestId::kClrt && !(y > 0.0 && y < 1.0)) {
      throw ConfigurationError("CLRT power is defined for 0 < y < 1; got y = " + fmt(y));
    }
    if (id == TestId::kCj && !(y > 0.0)) {
      throw ConfigurationError("CJ power is defined for y > 0; got y = " + fmt(y));
    }
  }
  const auto curve =
      power_curve(id, Probability(a.alpha), parse_spikes(a.spikes), MomentProfile(a.kappa, 0.0), grid);
  Sink sink(a.output, out);
  auto& o = sink.stream();
  o << "y,power\n";
  for (const auto& pt : curve) o << fmt(pt.y) << ',' << fmt(pt.power.value()) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- verify-clt

struct VerifyArgs {
  std::string y_grid = "0.1,0.25,0.5,0.9";
  double tol = 1e-6;
  int points = 1 << 17;
  std::string output;
};

int cmd_verify_clt(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  const auto grid = parse_grid(a.y_grid);
  ContourSpec spec;
  spec.quadrature_points = a.points;
  spec.validate();
  const std::vector<Integrand> fs{Integrand::log(), Integrand::id(), Integrand::square()};

  Sink sink(a.output, out);
  auto& o = sink.stream();
  o << "f,g,y,dI1,dI2,dJ1,dJ2\n";
  double worst = 0.0;
  std::string worst_where;
  int skipped = 0;
  for (double y : grid) {
    for (const auto& f : fs) {
      for (const auto& g : fs) {
        const bool has_log = f.tag() == IntegrandTag::kLog || g.tag() == IntegrandTag::kLog;
        const std::string where = "(" + f.name() + ", " + g.name() + ", y = " + fmt(y) + ")";
        if (has_log && y > spec.log_max_y) {
          ++skipped;
          err << "warning: skipping " << where << ": the log integrand is only verified for y <= "
              << fmt(spec.log_max_y) << " (its singularity approaches the unit circle as y -> 1)\n";
          continue;
        }
        double d[4] = {0, 0, 0, 0};
        try {
          const auto c = numeric_contour_params(f, g, y, spec);
          d[0] = std::abs(c.i1 - closed_i1(f, y));
          d[1] = std::abs(c.i2 - closed_i2(f, y));
          d[2] = std::abs(c.j1 - closed_j1(f, g, y));
          d[3] = std::abs(c.j2 - closed_j2(f, g, y));
        } catch (const AccuracyError& e) {
          err << "error: " << where << ": " << e.what() << '\n';
          d[0] = d[1] = d[2] = d[3] = e.residual();
        }
        o << f.name() << ',' << g.name() << ',' << fmt(y);
        for (double v : d) o << ',' << fmt(v);
        o << '\n';
        const double m = *std::max_element(std::begin(d), std::end(d));
        if (m > worst) {
          worst = m;
          worst_where = where;
        }
      }
    }
  }
  const bool ok = worst <= a.tol;
  err << "max |closed - numeric| = " << fmt(worst)
      << (worst_where.empty() ? "" : " at " + worst_where) << "; tolerance " << fmt(a.tol) << ": "
      << (ok ? "PASS" : "FAIL") << (skipped ? " (" + std::to_string(skipped) + " skipped)" : "")
      << '\n';
  return ok ? kExitOk : kExitVerifyFailed;
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
  const auto trimmed = detail::trim(text);
  if (trimmed.empty()) throw UsageError("empty grid");
  std::vector<double> out;
  if (trimmed.find(':') != std::string_view::npos) {
    const auto parts = detail::split(trimmed, ':');
    if (parts.size() != 3) throw UsageError("grid must be start:stop:step");
    const double start = to_double(std::string(parts[0]), "grid start");
    const double stop = to_double(std::string(parts[1]), "grid stop");
    const double step = to_double(std::string(parts[2]), "grid step");
    if (!(step > 0.0) || stop < start) throw UsageError("grid needs step > 0 and stop >= start");
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    if (count > 1000000) throw UsageError("grid is too large");
    for (long i = 0; i <= count; ++i) out.push_back(start + static_cast<double>(i) * step);
    return out;
  }
  for (auto item : detail::split(trimmed, ',')) out.push_back(to_double(std::string(item), "grid"));
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sphericity tests for large-dimensional data"};
  app.name("sphericity");
  app.require_subcommand(1);

  TestArgs test_args;
  auto* test = app.add_subcommand("test", "Run a sphericity test on a CSV data file");
  test->add_option("input", test_args.input, "CSV file (rows are observations), or - for stdin")
      ->required();
  test->add_option("--test", test_args.test, "clrt|cj|lw|bblrt|nagao|john|lrt")->capture_default_str();
  test->add_option("--alpha", test_args.alpha, "Significance level")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  test->add_option("--kappa", test_args.kappa, "2 for real data, 1 for complex")
      ->check(CLI::IsMember({1, 2}))
      ->capture_default_str();
  test->add_option("--beta", test_args.beta, "Fourth-moment excess, or auto to estimate it")
      ->capture_default_str();
  test->add_option("--mean", test_args.mean, "Population mean known (zero) or unknown")
      ->check(CLI::IsMember({"known", "unknown"}))
      ->capture_default_str();
  test->add_option("-o,--output", test_args.output, "Write the result here instead of stdout");
  test->add_flag("--transpose", test_args.transpose, "Input rows are variables, not observations");
  test->add_flag("--json", test_args.json, "Emit JSON");
  test->add_flag("--exit-on-reject", test_args.exit_on_reject, "Exit with status 2 on rejection");

  SimulateArgs sim_args;
  std::uint64_t seed_value = 0;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo size and power");
  sim->add_option("--table", sim_args.table, "Reproduce a simulation table")
      ->check(CLI::IsMember({1, 2, 3, 4}));
  sim->add_option("--p", sim_args.p, "Dimension")->check(CLI::PositiveNumber);
  sim->add_option("--n", sim_args.n, "Sample size")->check(CLI::PositiveNumber);
  sim->add_option("--test", sim_args.tests, "Comma-separated tests")->capture_default_str();
  sim->add_option("--scenario", sim_args.scenario, "normal|gamma")
      ->check(CLI::IsMember({"normal", "gamma"}))
      ->capture_default_str();
  sim->add_option("--design", sim_args.design, "null|half|quarter|spiked")->capture_default_str();
  sim->add_option("--spikes", sim_args.spikes, "a1:n1,a2:n2,... for --design spiked");
  sim->add_option("--reps", sim_args.reps, "Replications per cell")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  auto* seed_opt = sim->add_option("--seed", seed_value, "Master seed (default $SPHERICITY_SEED or 42)");
  sim->add_option("--workers", sim_args.workers, "Worker threads (0 = all cores)")->capture_default_str();
  sim->add_option("--alpha", sim_args.alpha, "Significance level")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sim->add_option("--mean", sim_args.mean, "known|unknown")
      ->check(CLI::IsMember({"known", "unknown"}))
      ->capture_default_str();
  sim->add_option("--beta-source", sim_args.beta_source, "auto|estimated|true")
      ->check(CLI::IsMember({"auto", "estimated", "true"}))
      ->capture_default_str();
  sim->add_option("--format", sim_args.format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  sim->add_option("-o,--output", sim_args.output, "Write results here instead of stdout");

  PowerArgs power_args;
  auto* power = app.add_subcommand("power", "Asymptotic power under spiked alternatives");
  power->add_option("--test", power_args.test, "clrt|cj")->required();
  power->add_option("--alpha", power_args.alpha, "Significance level")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  power->add_option("--spikes", power_args.spikes, "a1:n1,a2:n2,...")->required();
  power->add_option("--y-grid", power_args.y_grid, "start:stop:step or comma list")->required();
  power->add_option("--kappa", power_args.kappa, "2 for real data, 1 for complex")
      ->check(CLI::IsMember({1, 2}))
      ->capture_default_str();
  power->add_option("-o,--output", power_args.output, "Write the curve here instead of stdout");

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify-clt", "Compare closed-form CLT parameters with quadrature");
  verify->add_option("--y-grid", verify_args.y_grid, "start:stop:step or comma list")
      ->capture_default_str();
  verify->add_option("--tol", verify_args.tol, "Accepted absolute difference")->capture_default_str();
  verify->add_option("--points", verify_args.points, "Quadrature points (power of two)")
      ->capture_default_str();
  verify->add_option("-o,--output", verify_args.output, "Write the table here instead of stdout");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*test) return cmd_test(test_args, out, err);
    if (*sim) {
      if (*seed_opt) sim_args.seed = seed_value;
      return cmd_simulate(sim_args, out);
    }
    if (*power) return cmd_power(power_args, out);
    if (*verify) return cmd_verify_clt(verify_args, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CsvError& e) {
    err << "error: malformed CSV: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitUsage;
}

}  // namespace sphericity::cli
