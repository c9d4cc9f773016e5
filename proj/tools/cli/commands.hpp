#pragma once

// Subcommand implementations behind the `pfac` executable. Each returns a
// process exit code and writes human-readable progress to `log`.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include <pfac/scenario.hpp>
#include <pfac/simkit.hpp>
#include <pfac/verify.hpp>

#include "config.hpp"

namespace pfac::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsageError = 2, kDiverged = 3 };

/// Command-line overrides applied on top of a loaded config.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<PsiMode> mode;
};

/// Loads `path` and applies `ov`; the result is re-validated.
RunConfig resolve_config(const std::string& path, const Overrides& ov);

/// All monitors that apply to a scenario: the closed-loop stability checks, the
/// Lyapunov budget (one gain per stage), the dominance audit (auto mode) and
/// the missile roll window. `passed` is false if any applicable check fails.
nlohmann::json verify_trajectory(const Scenario& sc, const sim::Trajectory& traj, bool& passed);

struct RunRecord {
  std::string hash;
  std::filesystem::path dir;
  sim::Trajectory trajectory;
  nlohmann::json report;
  bool passed = false;
};

/// Integrates and writes runs/<hash>/{config.cfg, trajectory.csv,
/// summary.json, report.json, x.svg, k.svg, u.svg, record.json}.
RunRecord execute_run(const RunConfig& cfg);

int cmd_run(const RunConfig& cfg, std::ostream& log);
int cmd_verify(const RunConfig& cfg, std::ostream& log);
/// Re-verifies a registry entry by id (the config hash).
int cmd_verify_run(const std::string& registry, const std::string& id, const Overrides& ov, std::ostream& log);
int cmd_montecarlo(const RunConfig& cfg, std::size_t runs, std::ostream& log);
/// Re-renders x.svg, k.svg and u.svg from a trajectory CSV.
int cmd_plot(const std::string& csv, const std::string& out_dir, std::ostream& log);

/// Sweep spec from a config's sweep box, seed and worker count.
verify::MonteCarloSpec sweep_spec(const RunConfig& cfg, std::size_t runs);

/// Simulates one Monte-Carlo draw of a config.
sim::Trajectory simulate_draw(const RunConfig& cfg, const verify::MonteCarloDraw& draw);

}  // namespace pfac::cli
