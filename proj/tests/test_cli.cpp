#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "chfock/config.hpp"
#include "chfock/experiment.hpp"
#include "chfock/record.hpp"

using namespace chfock;
namespace fs = std::filesystem;

namespace {

std::string parse_error(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("chfock_test_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

const char* small_config =
    "model:\n"
    "  N_max: 6\n"
    "  mu: [-1, 1]\n"
    "  lambda: 0.5\n"
    "  masses: [1, 0.5, 0.1, 0.01, 0]\n"
    "checks:\n"
    "  ccr:\n"
    "  charge_commutation:\n"
    "  relative_bounds: {trials: 10}\n"
    "  mass_limit:\n";

}  // namespace

// ---------------------------------------------------------------------------
// Parsing

TEST(Config, EmptyTextGivesDefaultMatrix) {
  const RunConfig c = parse_config_text("");
  EXPECT_EQ(c.model.n_max, 8);
  EXPECT_EQ(c.coupling_points().size(), 6u);
  EXPECT_EQ(c.enabled_checks(), check_registry());
  EXPECT_EQ(c.model.truncation, Truncation::compressed);
}

TEST(Config, MinimalConfigWithOnlyNmax) {
  const RunConfig c = parse_config_text("model:\n  N_max: 6\n");
  EXPECT_EQ(c.model.n_max, 6);
  EXPECT_EQ(c.model.d, 1);
  EXPECT_EQ(c.model.P, 9u);
  EXPECT_EQ(c.model.mu, (std::vector<double>{-1.0, 0.0, 1.0}));
}

TEST(Config, ZeroCouplingRejectedWithReason) {
  const std::string msg = parse_error("model:\n  lambda: 0\n");
  EXPECT_NE(msg.find("λ>0 is a coupling constant"), std::string::npos) << msg;
  EXPECT_NE(msg.find("config:2:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("model.lambda"), std::string::npos) << msg;
}

TEST(Config, NegativeCouplingInListRejectedAtItsLine) {
  const std::string msg = parse_error("model:\n  lambda:\n    - 1\n    - -0.5\n");
  EXPECT_NE(msg.find("config:4:7"), std::string::npos) << msg;
}

TEST(Config, ZeroChargeRejected) {
  const std::string msg = parse_error("model:\n  q: 0\n");
  EXPECT_NE(msg.find("q∈ℝ∖{0}"), std::string::npos) << msg;
  EXPECT_NE(msg.find("model.q"), std::string::npos) << msg;
}

TEST(Config, UnknownKeysRejectedWithLocation) {
  EXPECT_NE(parse_error("model:\n  lamda: 1\n").find("config:2:3: model.lamda: unknown key"),
            std::string::npos);
  EXPECT_NE(parse_error("modle:\n  N_max: 4\n").find("config:1:1: modle: unknown key"),
            std::string::npos);
  EXPECT_NE(parse_error("checks:\n  ccrr:\n").find("checks.ccrr: unknown key"),
            std::string::npos);
  EXPECT_NE(parse_error("checks:\n  ccr: {margin: 3}\n").find("checks.ccr.margin: unknown key"),
            std::string::npos);
}

TEST(Config, SyntaxErrorReportsLineAndColumn) {
  const std::string msg = parse_error("model:\n  mu: [1, 2\n");
  EXPECT_EQ(msg.rfind("config:", 0), 0u) << msg;
  EXPECT_NE(msg.find(':', 7), std::string::npos);
}

TEST(Config, TypeErrorsNameTheField) {
  EXPECT_NE(parse_error("model:\n  N_max: eight\n").find("config:2:10: model.N_max"),
            std::string::npos);
  EXPECT_NE(parse_error("model:\n  mu: [1, x]\n").find("model.mu[1]"), std::string::npos);
}

TEST(Config, ModuleLevelPreconditionsRevalidated) {
  EXPECT_NE(parse_error("model:\n  profile: gauss\n").find("unknown profile"), std::string::npos);
  EXPECT_NE(parse_error("model:\n  K: 0\n").find("model.K"), std::string::npos);
  EXPECT_NE(parse_error("model:\n  N_max: 4\n").find("checks.double_commutator"),
            std::string::npos);
  EXPECT_NE(parse_error("model:\n  N_max: 5\n").find("checks.creator_commutator"),
            std::string::npos);
  EXPECT_EQ(parse_error("model:\n  N_max: 4\nchecks:\n  ccr:\n"), "");
  EXPECT_NE(parse_error("model:\n  N_max: 8\nsolver:\n  dimension_cap: 100\n").find("exceeds"),
            std::string::npos);
  EXPECT_NE(parse_error("model:\n  N_max: 14\n").find("checks.solver_oracle"),
            std::string::npos);
}

TEST(Config, MassListRules) {
  EXPECT_EQ(parse_config_text("model:\n  masses: [1, 0.1, 0]\n").model.masses,
            (std::vector<double>{1.0, 0.1}));
  EXPECT_NE(parse_error("model:\n  masses: [0.1, 0.5]\n").find("strictly descending"),
            std::string::npos);
  EXPECT_NE(parse_error("model:\n  masses: [1, 0, 0.1]\n").find("model.masses"),
            std::string::npos);
  EXPECT_NE(parse_error("model:\n  masses: [2, 1]\n").find("(0, 1]"), std::string::npos);
}

TEST(Config, InadmissibleBoundConstantsRejected) {
  const std::string msg = parse_error(
      "model:\n  lambda: 0.1\nchecks:\n  relative_bounds: {epsilon: 0.01, eta: 0.01}\n");
  EXPECT_NE(msg.find("checks.relative_bounds"), std::string::npos) << msg;
  EXPECT_NE(parse_error("checks:\n  relative_bounds: {epsilon: 0.01}\n").find("together"),
            std::string::npos);
}

TEST(Config, NormalizedFormRoundTrips) {
  const RunConfig a = parse_config_text(
      "model:\n  d: 1\n  n_half: 2\n  profile: {name: indicator}\n  chi: {name: constant, value: "
      "0.5, normalize: false}\n  mu: 0.3\n  lambda: [0.7]\n  truncation: composed\n"
      "solver:\n  seed: 99\nchecks:\n  lower_bound: {couplings: [[-1, 1], [0, 0.5]]}\n"
      "  relative_bounds: {thetas: [1, 3]}\n");
  const RunConfig b = parse_config_text(to_json(a).dump());
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(b.model.truncation, Truncation::composed);
  EXPECT_EQ(b.enabled_checks(), (std::vector<std::string>{"lower_bound", "relative_bounds"}));
}

TEST(Config, HashTracksContent) {
  const RunConfig a = parse_config_text("model:\n  mu: 1\n");
  const RunConfig b = parse_config_text("model:\n  mu: 1.0\n");
  const RunConfig c = parse_config_text("model:\n  mu: 0.5\n");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(c));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Config, EmptyChecksBlockDisablesAll) {
  EXPECT_TRUE(parse_config_text("checks: {}\n").enabled_checks().empty());
}

// ---------------------------------------------------------------------------
// Pipelines

TEST(Experiment, SolveRowPerCouplingPoint) {
  const RunConfig c = parse_config_text(small_config);
  const RunRecord r = run_experiment(c, RunMode::solve);
  ASSERT_EQ(r.solves.size(), 2u);
  EXPECT_TRUE(r.checks.empty());
  EXPECT_TRUE(r.errors.empty());
  for (const auto& s : r.solves) {
    EXPECT_EQ(s.dim, truncated_dimension(2, 6));
    EXPECT_GE(s.E0, -(s.mu * s.mu) / (4.0 * s.lambda) - 1e-10);
  }
}

TEST(Experiment, SectorRowPerNonemptyCharge) {
  RunConfig c = parse_config_text(small_config);
  c.model.mu = {0.5};
  const RunRecord r = run_experiment(c, RunMode::sectors);
  ASSERT_EQ(r.sectors.size(), 13u);  // z = -6 .. 6
  std::size_t total = 0;
  for (std::size_t i = 0; i < r.sectors.size(); ++i) {
    EXPECT_EQ(r.sectors[i].z, static_cast<int>(i) - 6);
    total += r.sectors[i].dim;
  }
  EXPECT_EQ(total, truncated_dimension(2, 6));
}

TEST(Experiment, SweepHasFiveRowsPerPointInDescendingMass) {
  const RunConfig c = parse_config_text(small_config);
  const RunRecord r = run_experiment(c, RunMode::sweep);
  ASSERT_EQ(r.sweep.size(), 10u);
  for (std::size_t g = 0; g < 2; ++g) {
    for (std::size_t i = 1; i < 5; ++i) EXPECT_GT(r.sweep[5 * g + i - 1].mass, r.sweep[5 * g + i].mass);
    EXPECT_EQ(r.sweep[5 * g + 4].mass, 0.0);
    EXPECT_EQ(r.sweep[5 * g + 4].E0_minus_E0_massless, 0.0);
  }
  ASSERT_EQ(r.checks.size(), 2u);
  EXPECT_EQ(r.checks[0].check_id, "mass_limit");
}

TEST(Experiment, VerifyRunsGlobalChecksOnce) {
  const RunConfig c = parse_config_text(small_config);
  const RunRecord r = run_experiment(c, RunMode::verify);
  std::map<std::string, int> count;
  for (const auto& row : r.checks) ++count[row.check_id];
  EXPECT_EQ(count["ccr"], 1);
  EXPECT_EQ(count["charge_commutation"], 2);
  EXPECT_EQ(count["relative_bounds"], 2);
  EXPECT_EQ(count["mass_limit"], 2);
  EXPECT_FALSE(r.checks.front().mu.has_value());
  EXPECT_TRUE(r.all_passed());
  EXPECT_EQ(exit_status(r), exit_code::ok);
}

TEST(Experiment, VerifyIsDeterministic) {
  const RunConfig c = parse_config_text(small_config);
  const std::string a = to_jsonl(without_timings(run_experiment(c, RunMode::verify)));
  const std::string b = to_jsonl(without_timings(run_experiment(c, RunMode::verify)));
  EXPECT_EQ(a, b);
}

TEST(Experiment, FailedCheckGivesExitOne) {
  const RunConfig c =
      parse_config_text("model:\n  N_max: 4\nchecks:\n  ccr: {threshold: 1e-300}\n");
  const RunRecord r = run_experiment(c, RunMode::verify);
  ASSERT_EQ(r.checks.size(), 1u);
  EXPECT_FALSE(r.checks[0].passed);
  EXPECT_EQ(exit_status(r), exit_code::check_failed);
}

TEST(Experiment, ErrorsTakePrecedenceInExitStatus) {
  RunRecord r;
  r.checks.push_back({"ccr", 1.0, 0.0, false, std::nullopt, std::nullopt, {}});
  EXPECT_EQ(exit_status(r), exit_code::check_failed);
  r.errors.push_back({"solve", "no convergence", 1.0, 1.0});
  EXPECT_EQ(exit_status(r), exit_code::solve_error);
}

TEST(Experiment, SolverFailureBecomesErrorRow) {
  RunConfig c = parse_config_text(
      "model:\n  N_max: 8\n  mu: 1\n  lambda: 1\nsolver:\n  tol: 1e-300\n  max_iter: 1\n"
      "  dense_threshold: 0\n  krylov_dim: 4\nchecks: {}\n");
  const RunRecord r = run_experiment(c, RunMode::solve);
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.errors[0].stage, "solve");
  EXPECT_EQ(exit_status(r), exit_code::solve_error);
}

// ---------------------------------------------------------------------------
// Emission

TEST(Report, EmptyCheckListGivesHeaderOnlyFile) {
  RunRecord r;
  r.header.config_hash = "0123456789abcdef";
  EXPECT_EQ(checks_csv(r),
            "# config_hash 0123456789abcdef\n"
            "check_id,residual,threshold,passed,mu,lambda,context\n");
}

TEST(Report, SweepColumnOrder) {
  const CsvTable t = parse_csv(sweep_csv(RunRecord{}));
  EXPECT_EQ(t.columns, (std::vector<std::string>{"mass", "E0", "E0_minus_E0_massless", "N_expect",
                                                 "sector", "gap", "mu", "lambda"}));
  EXPECT_TRUE(t.rows.empty());
}

TEST(Report, ReemittingLoadedRecordIsByteIdentical) {
  const RunConfig c = parse_config_text(small_config);
  const RunRecord r = run_experiment(c, RunMode::all);
  const fs::path a = scratch_dir("a"), b = scratch_dir("b");
  const std::vector<OutputFormat> both{OutputFormat::tabular, OutputFormat::records};
  const auto files = emit_report(r, a, both);
  ASSERT_EQ(files.size(), 5u);
  emit_report(load_record(a / "records.jsonl"), b, both);
  for (const auto& f : files) {
    const std::string first = slurp(f);
    EXPECT_FALSE(first.empty());
    EXPECT_EQ(first, slurp(b / f.filename())) << f;
    const std::string head = first.substr(0, first.find('\n'));
    if (f.extension() == ".csv")
      EXPECT_EQ(head, "# config_hash " + r.header.config_hash);
    else
      EXPECT_EQ(nlohmann::ordered_json::parse(head).at("config_hash"), r.header.config_hash);
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Report, CsvValuesRoundTripExactly) {
  const RunConfig c = parse_config_text(small_config);
  const RunRecord r = run_experiment(c, RunMode::all);
  const CsvTable checks = parse_csv(checks_csv(r));
  EXPECT_EQ(checks.config_hash, r.header.config_hash);
  ASSERT_EQ(checks.rows.size(), r.checks.size());
  for (std::size_t i = 0; i < r.checks.size(); ++i) {
    EXPECT_EQ(checks.rows[i][0], r.checks[i].check_id);
    EXPECT_EQ(std::strtod(checks.rows[i][1].c_str(), nullptr), r.checks[i].residual);
    EXPECT_EQ(nlohmann::ordered_json::parse(checks.rows[i][6]), r.checks[i].context);
  }
  const CsvTable sweep = parse_csv(sweep_csv(r));
  ASSERT_EQ(sweep.rows.size(), r.sweep.size());
  for (std::size_t i = 0; i < r.sweep.size(); ++i) {
    EXPECT_EQ(std::strtod(sweep.rows[i][1].c_str(), nullptr), r.sweep[i].E0);
    EXPECT_EQ(std::strtod(sweep.rows[i][3].c_str(), nullptr), r.sweep[i].N_expect);
  }
}

TEST(Report, NonFiniteValuesSurviveJsonLines) {
  RunRecord r;
  r.header.config_hash = "x";
  r.solves.push_back({});
  r.solves[0].gap = std::numeric_limits<double>::infinity();
  std::istringstream in(to_jsonl(r));
  const RunRecord back = parse_jsonl(in);
  EXPECT_TRUE(std::isinf(back.solves[0].gap));
  EXPECT_EQ(solves_csv(back), solves_csv(r));
}

TEST(Report, RecordIsRerunnableFromEmbeddedConfig) {
  const RunConfig c = parse_config_text(small_config);
  const RunRecord r = run_experiment(c, RunMode::solve);
  const RunConfig again = parse_config_text(r.header.config.dump());
  EXPECT_EQ(config_hash(again), r.header.config_hash);
  EXPECT_EQ(to_jsonl(without_timings(run_experiment(again, RunMode::solve))),
            to_jsonl(without_timings(r)));
}

// ---------------------------------------------------------------------------
// Command line

#ifdef CHFOCK_TOOL_PATH
namespace {
int run_tool(const std::string& args) {
  const int raw = std::system((std::string(CHFOCK_TOOL_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}
}  // namespace

TEST(Tool, ExitCodes) {
  const fs::path dir = scratch_dir("tool");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.yaml") << "model:\n  lambda: 0\n";
  std::ofstream(dir / "ok.yaml") << small_config;
  EXPECT_EQ(run_tool("solve --config " + (dir / "bad.yaml").string()), exit_code::usage);
  EXPECT_EQ(run_tool("frobnicate"), exit_code::usage);
  EXPECT_EQ(run_tool("verify --config " + (dir / "ok.yaml").string() + " --out " +
                     (dir / "out").string()),
            exit_code::ok);
  EXPECT_TRUE(fs::exists(dir / "out" / "records.jsonl"));
  EXPECT_EQ(run_tool("sweep --config " + (dir / "ok.yaml").string() + " --format tabular --out " +
                     (dir / "tab").string()),
            exit_code::ok);
  EXPECT_TRUE(fs::exists(dir / "tab" / "sweep.csv"));
  EXPECT_FALSE(fs::exists(dir / "tab" / "records.jsonl"));
  EXPECT_EQ(run_tool("solve --config " + (dir / "ok.yaml").string() + " --mode-cap 10 --out " +
                     (dir / "cap").string()),
            exit_code::usage);
  fs::remove_all(dir);
}
#endif
