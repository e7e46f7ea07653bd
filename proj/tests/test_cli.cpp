#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "csv.hpp"

namespace fs = std::filesystem;
using sphericity::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("sphericity-cli-" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string write(const std::string& name, const std::string& content) const {
    const auto p = path_ / name;
    std::ofstream(p) << content;
    return p.string();
  }
  [[nodiscard]] std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

// n observations of p iid normal variables, rows = observations.
std::string normal_csv(int p, int n, unsigned seed, bool header = true, double first_scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::ostringstream s;
  if (header) {
    for (int j = 0; j < p; ++j) s << (j ? "," : "") << "v" << j;
    s << '\n';
  }
  s.precision(17);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) s << (j ? "," : "") << (j == 0 ? first_scale : 1.0) * g(rng);
    s << '\n';
  }
  return s.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Csv, HeaderCommentsAndTranspose) {
  std::istringstream in("# comment\na,b,c\n1,2,3\n4,5,6\n\n");
  const auto d = sphericity::cli::read_csv(in, false);
  EXPECT_EQ(d.dim(), 3);
  EXPECT_EQ(d.samples(), 2);
  EXPECT_EQ(d.entries()(2, 1), 6.0);
  std::istringstream in2("1,2,3\n4,5,6\n");
  const auto t = sphericity::cli::read_csv(in2, true);
  EXPECT_EQ(t.dim(), 2);
  EXPECT_EQ(t.samples(), 3);
}

TEST(Csv, Malformed) {
  std::istringstream ragged("1,2\n3\n");
  EXPECT_THROW(sphericity::cli::read_csv(ragged, false), sphericity::cli::CsvError);
  std::istringstream text("1,2\n3,x\n");
  EXPECT_THROW(sphericity::cli::read_csv(text, false), sphericity::cli::CsvError);
  std::istringstream nan("1,2\n3,nan\n");
  EXPECT_THROW(sphericity::cli::read_csv(nan, false), sphericity::cli::CsvError);
  std::istringstream empty("");
  EXPECT_THROW(sphericity::cli::read_csv(empty, false), sphericity::cli::CsvError);
}

TEST(ParseGrid, Forms) {
  using sphericity::cli::parse_grid;
  EXPECT_EQ(parse_grid("0.5"), std::vector<double>{0.5});
  EXPECT_EQ(parse_grid("0.1,0.2"), (std::vector<double>{0.1, 0.2}));
  const auto r = parse_grid("0.1:0.5:0.1");
  ASSERT_EQ(r.size(), 5u);
  EXPECT_NEAR(r.back(), 0.5, 1e-12);
}

TEST(CliTest, JsonMatchesTextDecision) {
  TempDir dir;
  const auto input = dir.write("x.csv", normal_csv(10, 80, 1));
  for (std::string test : {"cj", "clrt", "lw", "john", "nagao", "lrt", "bblrt"}) {
    const auto text = invoke({"test", input, "--test", test});
    const auto js = invoke({"test", input, "--test", test, "--json"});
    ASSERT_EQ(text.code, 0) << text.err;
    ASSERT_EQ(js.code, 0) << js.err;
    const auto j = nlohmann::json::parse(js.out);
    const std::string decision = j.at("decision");
    EXPECT_NE(text.out.find("decision    " + decision), std::string::npos) << text.out;
    EXPECT_EQ(j.at("reject").get<bool>(), decision == "REJECT");
    EXPECT_EQ(j.at("p").get<int>(), 10);
    EXPECT_EQ(j.at("n").get<int>(), 80);
    const double pv = j.at("p_value");
    EXPECT_GE(pv, 0.0);
    EXPECT_LE(pv, 1.0);
  }
}

TEST(CliTest, JsonFieldsForCorrectedTests) {
  TempDir dir;
  const auto input = dir.write("x.csv", normal_csv(5, 60, 2));
  const auto r = invoke({"test", input, "--test", "cj", "--beta", "0.5", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("reference"), "normal");
  EXPECT_EQ(j.at("beta").get<double>(), 0.5);
  EXPECT_FALSE(j.at("beta_estimated").get<bool>());
  EXPECT_EQ(j.at("kappa").get<int>(), 2);
  const auto chi = nlohmann::json::parse(invoke({"test", input, "--test", "john", "--json"}).out);
  EXPECT_EQ(chi.at("reference"), "chisq");
  EXPECT_EQ(chi.at("df").get<double>(), 14.0);
  EXPECT_FALSE(chi.contains("beta"));
}

TEST(CliTest, OutputFileAndTranspose) {
  TempDir dir;
  const auto csv = normal_csv(4, 30, 3, false);
  const auto input = dir.write("x.csv", csv);
  const auto out_path = dir.file("out.json");
  ASSERT_EQ(invoke({"test", input, "--json", "-o", out_path}).code, 0);
  const auto j = nlohmann::json::parse(read_file(out_path));
  EXPECT_EQ(j.at("p").get<int>(), 4);
  const auto t = nlohmann::json::parse(invoke({"test", input, "--json", "--transpose"}).out);
  EXPECT_EQ(t.at("p").get<int>(), 30);
  EXPECT_EQ(t.at("n").get<int>(), 4);
}

TEST(CliTest, ExitOnReject) {
  TempDir dir;
  // First variable has variance 16: a glaring departure from sphericity.
  const auto input = dir.write("x.csv", normal_csv(6, 200, 4, true, 4.0));
  EXPECT_EQ(invoke({"test", input, "--exit-on-reject"}).code, 2);
  EXPECT_EQ(invoke({"test", input}).code, 0);
}

TEST(CliTest, UsageErrors) {
  TempDir dir;
  const auto bad = dir.write("bad.csv", "a,b\n1,2\n3\n");
  EXPECT_EQ(invoke({"test", bad}).code, 64);
  EXPECT_EQ(invoke({"test", dir.file("missing.csv")}).code, 64);
  const auto good = dir.write("x.csv", normal_csv(3, 20, 5));
  EXPECT_EQ(invoke({"test", good, "--bogus"}).code, 64);
  EXPECT_EQ(invoke({"test", good, "--test", "nope"}).code, 64);
  EXPECT_EQ(invoke({"test", good, "--alpha", "2"}).code, 64);
  EXPECT_EQ(invoke({"simulate", "--p", "4", "--n", "8", "--reps", "0"}).code, 64);
  EXPECT_EQ(invoke({}).code, 64);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(CliTest, ConfigurationErrors) {
  TempDir dir;
  const auto wide = dir.write("wide.csv", normal_csv(12, 10, 6));
  const auto r = invoke({"test", wide, "--test", "clrt"});
  EXPECT_EQ(r.code, 65);
  EXPECT_NE(r.err.find("p < N"), std::string::npos) << r.err;
  EXPECT_EQ(invoke({"test", wide, "--test", "cj"}).code, 0);

  const auto constant = dir.write("const.csv", "a,b,c\n1,5,2\n2,5,1\n0,5,3\n4,5,0\n");
  const auto c = invoke({"test", constant});
  EXPECT_EQ(c.code, 65);
  EXPECT_NE(c.err.find("b"), std::string::npos);
}

TEST(CliPower, Columns) {
  const auto r = invoke({"power", "--test", "cj", "--spikes", "2.5:1", "--y-grid", "0.1:0.9:0.1"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "y,power");
  double prev = 2.0;
  int rows = 0;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    const double power = std::stod(line.substr(comma + 1));
    EXPECT_LT(power, prev);
    prev = power;
    ++rows;
  }
  EXPECT_EQ(rows, 9);

  const auto flat = invoke({"power", "--test", "clrt", "--spikes", "1:3", "--y-grid", "0.2,0.6"});
  ASSERT_EQ(flat.code, 0);
  EXPECT_EQ(flat.out, "y,power\n0.2,0.05\n0.6,0.05\n");

  EXPECT_EQ(invoke({"power", "--test", "clrt", "--spikes", "2:1", "--y-grid", "1.0"}).code, 65);
  EXPECT_EQ(invoke({"power", "--test", "john", "--spikes", "2:1", "--y-grid", "0.5"}).code, 64);
}

TEST(CliVerify, DefaultPassesAndTightToleranceFails) {
  const auto ok = invoke({"verify-clt", "--y-grid", "0.25,0.5"});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(ok.out.rfind("f,g,y,dI1,dI2,dJ1,dJ2", 0), 0u);
  const auto strict = invoke({"verify-clt", "--y-grid", "0.5", "--tol", "1e-15"});
  EXPECT_EQ(strict.code, 1);
  const auto skip = invoke({"verify-clt", "--y-grid", "0.99"});
  EXPECT_EQ(skip.code, 0);
  EXPECT_NE(skip.err.find("warning"), std::string::npos);
}

TEST(CliSimulate, DeterministicOutput) {
  const std::vector<std::string> args = {"simulate", "--p", "8", "--n", "16", "--test", "cj,lw",
                                         "--scenario", "gamma", "--reps", "300", "--seed", "11"};
  auto with_workers = [&](const char* w) {
    auto a = args;
    a.push_back("--workers");
    a.push_back(w);
    return invoke(a);
  };
  const auto a = with_workers("1");
  const auto b = with_workers("3");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.rfind("test,scenario,design,p,n,reps,rejection_rate,stderr\n", 0), 0u);
}

TEST(CliSimulate, SeedFromEnvironment) {
  const std::vector<std::string> args = {"simulate", "--p", "4", "--n", "8", "--reps", "50",
                                         "--format", "json"};
  ::setenv("SPHERICITY_SEED", "777", 1);
  const auto env = invoke(args);
  ::unsetenv("SPHERICITY_SEED");
  ASSERT_EQ(env.code, 0) << env.err;
  EXPECT_EQ(nlohmann::json::parse(env.out)[0].at("seed").get<std::uint64_t>(), 777u);
  EXPECT_EQ(nlohmann::json::parse(invoke(args).out)[0].at("seed").get<std::uint64_t>(), 42u);
  auto explicit_seed = args;
  explicit_seed.insert(explicit_seed.end(), {"--seed", "5"});
  ::setenv("SPHERICITY_SEED", "777", 1);
  const auto over = invoke(explicit_seed);
  ::unsetenv("SPHERICITY_SEED");
  EXPECT_EQ(nlohmann::json::parse(over.out)[0].at("seed").get<std::uint64_t>(), 5u);
  ::setenv("SPHERICITY_SEED", "abc", 1);
  EXPECT_EQ(invoke(args).code, 64);
  ::unsetenv("SPHERICITY_SEED");
}

TEST(CliSimulate, InapplicableTestIsConfigError) {
  EXPECT_EQ(invoke({"simulate", "--p", "64", "--n", "64", "--test", "clrt", "--reps", "10"}).code, 65);
  EXPECT_EQ(invoke({"simulate", "--p", "8", "--n", "16", "--design", "spiked", "--reps", "10"}).code,
            64);
}
