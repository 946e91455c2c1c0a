// chfock: run solves, sector scans, mass sweeps and the verification suite
// from a YAML config and write records / CSV tables.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "chfock/config.hpp"
#include "chfock/experiment.hpp"
#include "chfock/record.hpp"

namespace {

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> mode_cap;
  std::string format;
};

void print_summary(const chfock::RunRecord& r, std::ostream& os) {
  for (const auto& s : r.solves)
    os << "solve mu=" << chfock::csv_number(s.mu) << " lambda=" << chfock::csv_number(s.lambda)
       << " E0=" << chfock::csv_number(s.E0) << " sector="
       << (s.sector ? std::to_string(*s.sector) : "mixed") << " dim=" << s.dim << "\n";
  if (!r.sectors.empty()) os << "sectors: " << r.sectors.size() << " rows\n";
  if (!r.sweep.empty()) os << "sweep: " << r.sweep.size() << " rows\n";
  for (const auto& c : r.checks) {
    os << (c.passed ? "PASS " : "FAIL ") << c.check_id;
    if (c.mu) os << " mu=" << chfock::csv_number(*c.mu) << " lambda=" << chfock::csv_number(*c.lambda);
    os << " residual=" << chfock::csv_number(c.residual)
       << " threshold=" << chfock::csv_number(c.threshold) << "\n";
  }
  for (const auto& e : r.errors) {
    os << "ERROR " << e.stage;
    if (e.mu) os << " mu=" << chfock::csv_number(*e.mu) << " lambda=" << chfock::csv_number(*e.lambda);
    os << ": " << e.message << "\n";
  }
}

int run(chfock::RunMode mode, const Options& o) {
  chfock::RunConfig config;
  try {
    config = o.config_path.empty() ? chfock::parse_config_text("")
                                   : chfock::parse_config_file(o.config_path);
    if (o.seed) config.solver.seed = *o.seed;
    if (o.mode_cap) config.dimension_cap = *o.mode_cap;
    chfock::validate(config);
  } catch (const chfock::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return chfock::exit_code::usage;
  }

  std::vector<chfock::OutputFormat> formats;
  const auto names = o.format.empty() ? config.output.formats : std::vector<std::string>{o.format};
  for (const auto& f : names)
    formats.push_back(f == "records" ? chfock::OutputFormat::records
                                     : chfock::OutputFormat::tabular);

  std::string dir = o.out_dir;
  if (dir.empty() && config.output.directory) dir = *config.output.directory;
  if (dir.empty()) {
    const char* env = std::getenv("CHFOCK_OUT_DIR");
    dir = env && *env ? env : "chfock-out";
  }

  const chfock::RunRecord record = chfock::run_experiment(config, mode);
  print_summary(record, std::cout);
  try {
    for (const auto& p : chfock::emit_report(record, dir, formats))
      std::cout << "wrote " << p.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "output: " << e.what() << "\n";
    return chfock::exit_code::solve_error;
  }
  return chfock::exit_status(record);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ground states and identity checks for a cutoff charged scalar field"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "YAML run configuration (defaults when omitted)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", o.out_dir,
                 "Output directory (default: output.directory, $CHFOCK_OUT_DIR, chfock-out)");
  app.add_option("--seed", o.seed, "Overrides solver.seed");
  app.add_option("--mode-cap", o.mode_cap, "Overrides solver.dimension_cap")
      ->check(CLI::PositiveNumber);
  app.add_option("--format", o.format, "Write only this format")
      ->check(CLI::IsMember({"tabular", "records"}));
  app.fallthrough();

  chfock::RunMode mode = chfock::RunMode::all;
  const std::pair<const char*, const char*> verbs[] = {
      {"solve", "Global ground state at each coupling point"},
      {"sectors", "Ground state of every charge sector"},
      {"sweep", "Massive ground states down to the massless point"},
      {"verify", "Run the enabled checks"},
      {"all", "solve, sectors, sweep and verify"}};
  for (const auto& [name, help] : verbs) {
    app.add_subcommand(name, help)->callback(
        [&mode, n = std::string(name)] { mode = chfock::run_mode_from_string(n); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : chfock::exit_code::usage;
  }
  return run(mode, o);
}
