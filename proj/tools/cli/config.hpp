#pragma once

// Flat, typed key = value configuration files with dotted sections.
//
//   # comment
//   scenario = numeric-2d
//   controller.mu = 0.2, 0.2
//   theta.1.kind = sinusoid
//
// Keys are validated against a fixed schema; unknown keys, duplicates,
// malformed values and constraint violations raise pfac::ConfigError with
// the offending key path.

#include <cstdint>
#include <string>
#include <vector>

#include <pfac/scenario.hpp>

namespace pfac::cli {

/// Sampling box of a Monte-Carlo sweep (empty vectors: scenario default).
struct SweepBox {
  std::vector<double> x0_lower;
  std::vector<double> x0_upper;
  std::vector<double> theta_lower;
  std::vector<double> theta_upper;
  unsigned workers = 0;
};

struct RunConfig {
  ScenarioConfig scenario;
  SweepBox sweep;
};

/// Parses configuration text. `origin` names the source in error messages.
RunConfig parse_config(const std::string& text, const std::string& origin = "config");

/// Reads and parses a file. Throws ConfigError if it cannot be read.
RunConfig load_config(const std::string& path);

/// Canonical text form: every key of the schema in a fixed order, numbers in
/// shortest round-trip form. parse_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& cfg);

/// 16 hex digits of FNV-1a over the canonical text.
std::string config_hash(const RunConfig& cfg);

/// Scenario default sweep box (x0 and theta boxes used by `montecarlo`).
SweepBox default_sweep(const ScenarioConfig& cfg);

/// Documented keys, one "key  type  description" line each.
std::vector<std::string> schema_lines();

}  // namespace pfac::cli
