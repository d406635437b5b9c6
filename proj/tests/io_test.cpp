#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gtep/case_io.hpp"
#include "gtep/report.hpp"
#include "toy_cases.hpp"

namespace gtep {
namespace {

namespace fs = std::filesystem;

const std::string kCases = GTEP_CASES_DIR;
const std::string kCli = GTEP_CLI_PATH;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Diagnostic> diagnostics_of(const std::string& text) {
  try {
    parse_case(text);
  } catch (const CaseError& e) {
    return e.diagnostics();
  }
  return {};
}

const char* kMinimal = R"(schema: gtep-case
version: 1
name: mini
horizon:
  stages: 1
buses:
  - {id: A}
  - {id: B}
circuits:
  - {id: AB, from: A, to: B, susceptance: 2.0, rating: 50}
thermals:
  - {id: G, bus: A, capacity: 100, variable_cost: 20}
demand:
  blocks:
    - {duration: 0.5, load: [[10, 30]]}
    - {duration: 0.5, load: [[8, 25]]}
)";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  return s.replace(at, from.size(), to);
}

TEST(CaseIo, MinimalCaseLoads) {
  const auto loaded = parse_case(kMinimal);
  EXPECT_EQ(loaded.planning.name, "mini");
  EXPECT_EQ(loaded.planning.buses.size(), 2u);
  EXPECT_EQ(loaded.planning.num_blocks(), 2);
}

TEST(CaseIo, BundledToyRoundTrips) {
  const auto first = load_case(kCases + "/toy.yaml");
  const auto second = parse_case(serialize_case(first.planning, first.config));
  EXPECT_EQ(first.planning, second.planning);
  EXPECT_EQ(first.config.seed, second.config.seed);
  EXPECT_EQ(first.config.target_gap, second.config.target_gap);
  EXPECT_EQ(first.config.max_iterations, second.config.max_iterations);
  EXPECT_EQ(serialize_case(first.planning, first.config),
            serialize_case(second.planning, second.config));
}

TEST(CaseIo, GeneratedCasesRoundTrip) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto c = toys::random_toy(seed);
    const auto back = parse_case(serialize_case(c));
    EXPECT_EQ(c, back.planning) << "seed " << seed;
  }
}

TEST(CaseIo, NegativeSusceptanceNamesCircuit) {
  const auto d = diagnostics_of(replace(kMinimal, "susceptance: 2.0", "susceptance: -2.0"));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NE(d[0].message.find("AB"), std::string::npos) << d[0].message;
  EXPECT_EQ(d[0].line, 10);
}

TEST(CaseIo, BlockDurationsMustSumToOne) {
  const auto d = diagnostics_of(replace(kMinimal, "duration: 0.5, load: [[8", "duration: 0.47, load: [[8"));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NE(d[0].message.find("block durations must sum to 1"), std::string::npos);
}

TEST(CaseIo, UnknownKeyReportsLine) {
  const auto d = diagnostics_of(replace(kMinimal, "variable_cost: 20}", "variable_cost: 20, colour: red}"));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].line, 12);
  EXPECT_NE(d[0].message.find("colour"), std::string::npos);
}

TEST(CaseIo, ReportsEveryProblemAtOnce) {
  auto text = replace(kMinimal, "capacity: 100", "capacity: lots");
  text = replace(text, "rating: 50}", "rating: 50, status: maybe}");
  EXPECT_EQ(diagnostics_of(text).size(), 2u);
}

TEST(CaseIo, SchemaTagAndVersionChecked) {
  auto d = diagnostics_of(replace(kMinimal, "schema: gtep-case", "schema: other"));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].path, "schema");
  d = diagnostics_of(replace(kMinimal, "version: 1", "version: 7"));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].path, "version");
}

TEST(CaseIo, MalformedYamlHasPosition) {
  const auto d = diagnostics_of("schema: gtep-case\nbuses: [a, b\n");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_GT(d[0].line, 0);
}

TEST(CaseIo, MissingFileIsDataError) {
  EXPECT_THROW(load_case(kCases + "/does-not-exist.yaml"), DataError);
}

TEST(PlanIo, RoundTrip) {
  const auto c = load_case(kCases + "/toy.yaml").planning;
  TrialPlan plan = TrialPlan::nothing(c);
  plan.built[0] = {0.0, 1.0};
  plan.built[2] = {1.0, 1.0};
  EXPECT_EQ(parse_plan(serialize_plan(c, plan), c), plan);
  EXPECT_EQ(load_plan(kCases + "/empty.plan", c), TrialPlan::nothing(c));
}

TEST(PlanIo, RejectsBadEntries) {
  const auto c = load_case(kCases + "/toy.yaml").planning;
  const std::string head = "schema: gtep-plan\nversion: 1\nbuilds:\n";
  EXPECT_THROW(parse_plan(head + "  - {project: nope, stage: 1}\n", c), CaseError);
  EXPECT_THROW(parse_plan(head + "  - {project: P-C2, stage: 3}\n", c), CaseError);
  EXPECT_THROW(parse_plan(head + "  - {project: P-C2, stage: 1}\n  - {project: P-C2, stage: 2}\n", c),
               CaseError);
  EXPECT_THROW(parse_plan("schema: gtep-case\nversion: 1\n", c), CaseError);
}

TEST(Report, NumbersRoundTrip) {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 6.02e23, 1e-300})
    EXPECT_EQ(std::stod(num(v)), v);
  EXPECT_EQ(num(0.03), "0.03");
}

// Command-line front end.

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + kCli + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gtep-io-test-" + name);
  fs::remove_all(p);
  return p;
}

std::map<std::string, std::string> bundle(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename() != "timing.csv") out[e.path().filename().string()] = slurp(e.path());
  return out;
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("validate " + kCases + "/toy.yaml"), 0);
  EXPECT_EQ(run_cli("validate " + kCases + "/broken.yaml"), 2);
  EXPECT_EQ(run_cli("validate " + kCases + "/missing.yaml"), 2);
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("run " + kCases + "/toy.yaml --gap abc"), 1);
  EXPECT_EQ(run_cli("simulate " + kCases + "/toy.yaml"), 1);
  EXPECT_EQ(run_cli("--help"), 0);
}

TEST(Cli, BrokenCaseDiagnosticsOnStandardError) {
  const fs::path err = scratch("stderr.txt");
  const std::string cmd = kCli + " validate " + kCases + "/broken.yaml 2>" + err.string() + " >/dev/null";
  std::system(cmd.c_str());
  const std::string text = slurp(err);
  EXPECT_NE(text.find("L12"), std::string::npos) << text;
  EXPECT_NE(text.find("block durations must sum to 1"), std::string::npos) << text;
}

TEST(Cli, RunTwiceIsByteIdentical) {
  const fs::path a = scratch("run-a"), b = scratch("run-b");
  ASSERT_EQ(run_cli("run " + kCases + "/toy.yaml --gap 0.03 --seed 1 --out " + a.string()), 0);
  ASSERT_EQ(run_cli("run " + kCases + "/toy.yaml --gap 0.03 --seed 1 --out " + b.string()), 0);
  const auto ba = bundle(a);
  EXPECT_EQ(ba, bundle(b));
  for (const char* f : {"summary.yaml", "plan.csv", "circuits.csv", "capacity.csv", "dispatch.csv",
                        "marginal_cost.csv", "convergence.csv", "best.plan"})
    EXPECT_TRUE(ba.count(f)) << f;
  EXPECT_TRUE(fs::exists(a / "timing.csv"));
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  const fs::path d = scratch("env");
  ASSERT_EQ(run_cli("validate " + kCases + "/toy.yaml", "GTEP_OUT_DIR=" + d.string()), 0);
  ASSERT_EQ(run_cli("run " + kCases + "/toy.yaml", "GTEP_OUT_DIR=" + d.string()), 0);
  EXPECT_TRUE(fs::exists(d / "summary.yaml"));
}

TEST(Cli, SimulateEmptyPlanMatchesFirstIteration) {
  const fs::path r = scratch("cross-run"), s = scratch("cross-sim");
  ASSERT_EQ(run_cli("run " + kCases + "/toy.yaml --seed 1 --out " + r.string()), 0);
  ASSERT_EQ(run_cli("simulate " + kCases + "/toy.yaml --plan " + kCases + "/empty.plan --seed 1 --out " +
                    s.string()),
            0);
  const YAML::Node summary = YAML::LoadFile((s / "summary.yaml").string());
  std::ifstream conv(r / "convergence.csv");
  std::string header, first;
  std::getline(conv, header);
  std::getline(conv, first);
  std::vector<std::string> cells;
  std::stringstream ss(first);
  for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
  ASSERT_GT(cells.size(), 6u);
  EXPECT_EQ(cells[5], "0");
  EXPECT_EQ(summary["operation_cost"].as<double>(), std::stod(cells[6]));
}

TEST(Cli, SimulatedPlanCostMatchesRunSummary) {
  const fs::path r = scratch("best-run"), s = scratch("best-sim");
  ASSERT_EQ(run_cli("run " + kCases + "/toy.yaml --seed 1 --out " + r.string()), 0);
  ASSERT_EQ(run_cli("simulate " + kCases + "/toy.yaml --plan " + (r / "best.plan").string() +
                    " --seed 1 --out " + s.string()),
            0);
  const YAML::Node run = YAML::LoadFile((r / "summary.yaml").string());
  const YAML::Node sim = YAML::LoadFile((s / "summary.yaml").string());
  EXPECT_EQ(run["investment_cost"].as<double>(), sim["investment_cost"].as<double>());
  EXPECT_EQ(run["operation_cost"].as<double>(), sim["operation_cost"].as<double>());
}

TEST(Cli, BundledToyPlanMatchesEnumeration) {
  const fs::path r = scratch("toy-plan");
  ASSERT_EQ(run_cli("run " + kCases + "/toy.yaml --out " + r.string()), 0);
  const auto c = load_case(kCases + "/toy.yaml").planning;
  const auto best = toys::enumerate_optimum(c);
  EXPECT_EQ(load_plan((r / "best.plan").string(), c), best.plan);
  std::ifstream table(r / "plan.csv");
  std::string line;
  std::getline(table, line);
  int rows = 0;
  for (; std::getline(table, line); ++rows) {
    const std::string id = line.substr(0, line.find(','));
    int p = 0;
    while (c.candidates[p].id != id) ++p;
    const auto fields = [&] {
      std::vector<std::string> f;
      std::stringstream ss(line);
      for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
      return f;
    }();
    EXPECT_EQ(std::stoi(fields[5]), entry_stage(best.plan, p)) << id;
  }
  int built = 0;
  for (std::size_t p = 0; p < c.candidates.size(); ++p) built += entry_stage(best.plan, static_cast<int>(p)) > 0;
  EXPECT_EQ(rows, built);
}

}  // namespace
}  // namespace gtep
