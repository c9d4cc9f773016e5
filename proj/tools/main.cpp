#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "cli/config.hpp"

namespace {

using pfac::cli::Overrides;

struct Flags {
  std::string config;
  std::string run_id;
  std::string out;
  std::string mode;
  std::uint64_t seed = 0;
  std::size_t runs = 100;
  std::string csv;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "configuration file");
  cmd->add_option("--seed", f.seed, "override the configured seed");
  cmd->add_option("--out", f.out, "run registry directory (default: output.dir)");
  cmd->add_option("--mode", f.mode, "psi synthesis mode")->check(CLI::IsMember({"paper", "auto"}));
}

Overrides overrides(const CLI::App* cmd, const Flags& f) {
  Overrides ov;
  if (cmd->count("--seed")) ov.seed = f.seed;
  if (cmd->count("--out")) ov.out = f.out;
  if (cmd->count("--mode")) ov.mode = f.mode == "auto" ? pfac::PsiMode::Auto : pfac::PsiMode::Paper;
  return ov;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive backstepping for pure-feedback systems: simulate, verify, sweep, plot"};
  app.require_subcommand(1);
  Flags f;

  auto* run = app.add_subcommand("run", "integrate a scenario and write its artifacts");
  add_common(run, f);
  run->get_option("--config")->required();

  auto* verify = app.add_subcommand("verify", "run all monitors on a config or registry entry");
  add_common(verify, f);
  verify->add_option("--run", f.run_id, "registry id (config hash) of an earlier run");

  auto* mc = app.add_subcommand("montecarlo", "randomized sweep over x(0) and theta profiles");
  add_common(mc, f);
  mc->get_option("--config")->required();
  mc->add_option("--runs", f.runs, "number of draws (>= 1)");

  auto* plot = app.add_subcommand("plot", "re-render SVG plots from a trajectory CSV");
  plot->add_option("--csv", f.csv, "trajectory CSV")->required();
  plot->add_option("--out", f.out, "output directory (default: the CSV's directory)");

  auto* schema = app.add_subcommand("schema", "print the configuration keys");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : pfac::cli::kUsageError;
  }

  try {
    if (*run) return pfac::cli::cmd_run(pfac::cli::resolve_config(f.config, overrides(run, f)), std::cout);
    if (*verify) {
      if (verify->count("--run")) {
        if (verify->count("--config")) throw pfac::ConfigError("verify: give either --config or --run");
        return pfac::cli::cmd_verify_run(f.out.empty() ? "runs" : f.out, f.run_id, overrides(verify, f), std::cout);
      }
      if (f.config.empty()) throw pfac::ConfigError("verify: --config or --run is required");
      return pfac::cli::cmd_verify(pfac::cli::resolve_config(f.config, overrides(verify, f)), std::cout);
    }
    if (*mc) return pfac::cli::cmd_montecarlo(pfac::cli::resolve_config(f.config, overrides(mc, f)), f.runs, std::cout);
    if (*plot) return pfac::cli::cmd_plot(f.csv, f.out, std::cout);
    if (*schema) {
      for (const auto& line : pfac::cli::schema_lines()) std::cout << line << '\n';
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pfac::cli::kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pfac::cli::kCheckFailed;
  }
  return pfac::cli::kUsageError;
}
