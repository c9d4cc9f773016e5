#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <regex>
#include <sstream>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <pfac/svg.hpp>

namespace pfac::cli {
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", p.string()));
  out << content;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
}

void validate(const RunConfig& cfg) {
  try {
    (void)build_scenario(cfg.scenario);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

int exit_for(const sim::Trajectory& traj, bool passed) {
  if (traj.diverged) return kDiverged;
  return passed ? kOk : kCheckFailed;
}

}  // namespace

RunConfig resolve_config(const std::string& path, const Overrides& ov) {
  RunConfig cfg = load_config(path);
  if (ov.seed) cfg.scenario.seed = *ov.seed;
  if (ov.out) cfg.scenario.output_dir = *ov.out;
  if (ov.mode) cfg.scenario.mode = *ov.mode;
  validate(cfg);
  return cfg;
}

nlohmann::json verify_trajectory(const Scenario& sc, const sim::Trajectory& traj, bool& passed) {
  const ScenarioConfig& cfg = sc.config;
  nlohmann::json j;
  const auto inv = verify::check_theorem1(traj, cfg.tolerances);
  j["stability"] = verify::to_json(inv);
  passed = inv.passed();

  if (sc.model.gains == sc.model.n) {
    const auto budget = verify::lyapunov_budget(traj, sc.oracle, cfg.mu, cfg.gamma, cfg.budget_slack);
    j["lyapunov_budget"] = verify::to_json(budget);
    if (budget.applicable && !budget.passed) passed = false;
  }

  if (sc.controller && sc.controller->mode() == PsiMode::Auto) {
    nlohmann::json audits = nlohmann::json::array();
    for (std::size_t stage = 2; stage <= sc.controller->order(); ++stage) {
      const auto rep = verify::dominance_audit(*sc.controller, sc.plant, sc.oracle, sc.theta, stage,
                                               cfg.dominance_samples, cfg.audit_box, cfg.seed);
      audits.push_back(verify::to_json(rep));
      if (rep.violations != 0) passed = false;
    }
    j["dominance_audit"] = audits;
  }

  if (cfg.scenario == "stt-missile") {
    double worst = 0.0;
    double at = 0.0;
    std::size_t count = 0;
    for (const auto& s : traj.samples) {
      if (s.t + 1e-12 < cfg.roll_window_start) continue;
      ++count;
      const double deg = std::abs(s.x[0]) * 180.0 / std::numbers::pi;
      if (deg >= worst) {
        worst = deg;
        at = s.t;
      }
    }
    const bool ok = traj.complete() && count > 0 && worst <= cfg.roll_tol_deg;
    j["roll_window"] = {{"window_start", cfg.roll_window_start},
                        {"tolerance_deg", cfg.roll_tol_deg},
                        {"max_abs_roll_deg", worst},
                        {"at_time", at},
                        {"samples", count},
                        {"passed", ok}};
    if (!ok) passed = false;
  }
  j["passed"] = passed;
  return j;
}

RunRecord execute_run(const RunConfig& cfg) {
  const Scenario sc = build_scenario(cfg.scenario);
  RunRecord rec;
  rec.hash = config_hash(cfg);
  rec.dir = fs::path(cfg.scenario.output_dir) / rec.hash;
  fs::create_directories(rec.dir);

  rec.trajectory = simulate(sc);
  rec.report = verify_trajectory(sc, rec.trajectory, rec.passed);

  write_file(rec.dir / "config.cfg", to_text(cfg));
  {
    std::ofstream csv(rec.dir / "trajectory.csv", std::ios::binary);
    sim::write_csv(rec.trajectory, csv, sc.extra_columns);
  }
  nlohmann::json summary = sim::summary_json(rec.trajectory);
  summary["metadata"] = sc.metadata;
  write_file(rec.dir / "summary.json", summary.dump(2) + "\n");
  write_file(rec.dir / "report.json", rec.report.dump(2) + "\n");
  write_file(rec.dir / "x.svg", svg::plot_states(rec.trajectory));
  write_file(rec.dir / "k.svg", svg::plot_gains(rec.trajectory));
  write_file(rec.dir / "u.svg", svg::plot_input(rec.trajectory));

  const nlohmann::json record = {{"hash", rec.hash},
                                 {"timestamp", utc_timestamp()},
                                 {"scenario", cfg.scenario.scenario},
                                 {"config", "config.cfg"},
                                 {"trajectory_csv", "trajectory.csv"},
                                 {"summary_json", "summary.json"},
                                 {"report_json", "report.json"},
                                 {"plots", {"x.svg", "k.svg", "u.svg"}},
                                 {"diverged", rec.trajectory.diverged},
                                 {"failure", rec.trajectory.failure},
                                 {"passed", rec.passed},
                                 {"invariants", rec.report["stability"]}};
  write_file(rec.dir / "record.json", record.dump(2) + "\n");
  return rec;
}

int cmd_run(const RunConfig& cfg, std::ostream& log) {
  const RunRecord rec = execute_run(cfg);
  fmt::print(log, "run {} ({})\n", rec.hash, cfg.scenario.scenario);
  fmt::print(log, "  artifacts: {}\n", rec.dir.string());
  if (rec.trajectory.diverged) {
    fmt::print(log, "  DIVERGED: {}\n", rec.trajectory.failure);
    return kDiverged;
  }
  const auto& last = rec.trajectory.samples.back();
  fmt::print(log, "  t = {}  x = [{}]  k = [{}]\n", last.t, fmt::join(last.x, ", "), fmt::join(last.k, ", "));
  fmt::print(log, "  checks: {}\n", rec.passed ? "pass" : "FAIL");
  return exit_for(rec.trajectory, rec.passed);
}

int cmd_verify(const RunConfig& cfg, std::ostream& log) {
  const RunRecord rec = execute_run(cfg);
  fmt::print(log, "verify {} ({})\n", rec.hash, cfg.scenario.scenario);
  for (const auto& c : rec.report["stability"]["checks"]) {
    fmt::print(log, "  {:<24} {}\n", c["name"].get<std::string>(),
               !c["applicable"].get<bool>() ? "n/a" : (c["passed"].get<bool>() ? "pass" : "FAIL"));
  }
  if (rec.report.contains("lyapunov_budget")) {
    const auto& b = rec.report["lyapunov_budget"];
    fmt::print(log, "  {:<24} {} (max violation {})\n", "lyapunov_budget",
               !b["applicable"].get<bool>() ? "n/a" : (b["passed"].get<bool>() ? "pass" : "FAIL"),
               b["max_violation"].get<double>());
  }
  if (rec.report.contains("dominance_audit")) {
    for (const auto& a : rec.report["dominance_audit"]) {
      fmt::print(log, "  dominance stage {:<8} {} violations / {} samples\n", a["stage"].get<std::size_t>(),
                 a["violations"].get<std::size_t>(), a["samples"].get<std::size_t>());
    }
  }
  if (rec.report.contains("roll_window")) {
    const auto& r = rec.report["roll_window"];
    fmt::print(log, "  {:<24} {} (max |roll| {} deg)\n", "roll_window", r["passed"].get<bool>() ? "pass" : "FAIL",
               r["max_abs_roll_deg"].get<double>());
  }
  fmt::print(log, "  report: {}\n", (rec.dir / "report.json").string());
  return exit_for(rec.trajectory, rec.passed);
}

int cmd_verify_run(const std::string& registry, const std::string& id, const Overrides& ov, std::ostream& log) {
  if (id.empty()) throw ConfigError("verify: empty run id");
  const fs::path cfg_path = fs::path(registry) / id / "config.cfg";
  if (!fs::exists(cfg_path)) {
    throw ConfigError(fmt::format("verify: no run '{}' in registry '{}'", id, registry));
  }
  Overrides keep_dir;
  keep_dir.out = ov.out ? *ov.out : registry;
  return cmd_verify(resolve_config(cfg_path.string(), keep_dir), log);
}

verify::MonteCarloSpec sweep_spec(const RunConfig& cfg, std::size_t runs) {
  verify::MonteCarloSpec spec;
  spec.runs = runs;
  spec.seed = cfg.scenario.seed;
  spec.x0_lower = cfg.sweep.x0_lower;
  spec.x0_upper = cfg.sweep.x0_upper;
  spec.theta_lower = cfg.sweep.theta_lower;
  spec.theta_upper = cfg.sweep.theta_upper;
  spec.workers = cfg.sweep.workers;
  return spec;
}

sim::Trajectory simulate_draw(const RunConfig& cfg, const verify::MonteCarloDraw& draw) {
  ScenarioConfig sc = cfg.scenario;
  sc.x0 = draw.x0;
  sc.theta = draw.theta.components();
  sc.seed = draw.seed;
  return simulate(build_scenario(sc));
}

int cmd_montecarlo(const RunConfig& cfg, std::size_t runs, std::ostream& log) {
  if (runs == 0) throw ConfigError("montecarlo: --runs must be at least 1");
  const auto spec = sweep_spec(cfg, runs);
  const auto report = verify::monte_carlo(
      spec, [&cfg](const verify::MonteCarloDraw& d) { return simulate_draw(cfg, d); }, cfg.scenario.tolerances);

  const std::string hash = config_hash(cfg);
  const fs::path dir = fs::path(cfg.scenario.output_dir) / hash;
  fs::create_directories(dir);
  write_file(dir / "config.cfg", to_text(cfg));
  nlohmann::json j = verify::to_json(report);
  j["hash"] = hash;
  j["scenario"] = cfg.scenario.scenario;
  const fs::path out = dir / fmt::format("montecarlo-{}.json", runs);
  write_file(out, j.dump(2) + "\n");

  fmt::print(log, "montecarlo {} ({}): {}/{} passed, seed {}\n", hash, cfg.scenario.scenario, report.passed,
             report.runs, report.seed);
  for (const auto& r : report.results) {
    if (!r.passed) {
      fmt::print(log, "  draw {} failed: x0 = [{}] {}\n", r.draw.index, fmt::join(r.draw.x0, ", "), r.failure);
    }
  }
  fmt::print(log, "  report: {}\n", out.string());
  return report.passed == report.runs ? kOk : kCheckFailed;
}

int cmd_plot(const std::string& csv, const std::string& out_dir, std::ostream& log) {
  std::ifstream in(csv);
  if (!in) throw ConfigError(fmt::format("plot: cannot read '{}'", csv));
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(fmt::format("plot: '{}' is empty", csv));
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.empty() || header[0] != "t") throw ConfigError(fmt::format("plot: '{}' has no leading t column", csv));

  std::vector<std::vector<double>> cols(header.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= header.size()) throw ConfigError(fmt::format("plot: {}:{}: too many fields", csv, row));
      cols[c++].push_back(cell == "nan" ? NAN : std::stod(cell));
    }
    if (c != header.size()) throw ConfigError(fmt::format("plot: {}:{}: expected {} fields", csv, row, header.size()));
  }

  static const std::regex state_re("x[0-9]+");
  static const std::regex gain_re("k[0-9]+");
  std::vector<svg::Series> xs, ks, us;
  for (std::size_t c = 1; c < header.size(); ++c) {
    svg::Series s{header[c], cols[0], cols[c]};
    if (std::regex_match(header[c], state_re)) xs.push_back(std::move(s));
    else if (std::regex_match(header[c], gain_re)) ks.push_back(std::move(s));
    else if (header[c] == "u") us.push_back(std::move(s));
  }
  const fs::path dir = out_dir.empty() ? fs::path(csv).parent_path() : fs::path(out_dir);
  if (!dir.empty()) fs::create_directories(dir);
  write_file(dir / "x.svg", svg::line_plot(xs, {"states", "t [s]", "x"}));
  write_file(dir / "k.svg", svg::line_plot(ks, {"adaptive gains", "t [s]", "k"}));
  write_file(dir / "u.svg", svg::line_plot(us, {"control input", "t [s]", "u"}));
  fmt::print(log, "plots written to {}\n", dir.empty() ? "." : dir.string());
  return kOk;
}

}  // namespace pfac::cli
