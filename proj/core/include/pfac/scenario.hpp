#pragma once

// Named scenarios ("numeric-2d", "stt-missile") assembled from a typed
// configuration into a ready-to-integrate closed loop.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfac/backstep.hpp"
#include "pfac/missile.hpp"
#include "pfac/plant.hpp"
#include "pfac/simkit.hpp"
#include "pfac/verify.hpp"

namespace pfac {

enum class AngleUnit { Radian, Degree };

struct ScenarioConfig {
  std::string scenario = "numeric-2d";

  // controller
  PsiMode mode = PsiMode::Paper;
  std::vector<double> mu;
  std::vector<double> gamma;
  std::vector<double> k0;
  double deadzone = 0.0;
  double smoothing = 1e-6;
  int psi_power = 0;  ///< 0 picks the scenario default
  bool sabotage = false;

  // missile design and airframe
  double missile_k1 = 5.0;
  double missile_epsilon = 0.1;
  double missile_xi = 1.0;
  double missile_s = 0.42;
  double missile_l = 0.68;
  double missile_Jx = 100.0;
  double missile_tau_a = 0.01;
  double missile_rho_air = 0.7361;

  // integrator
  double horizon = 100.0;
  double step = 1e-3;
  std::size_t decimation = 10;

  // initial condition
  std::vector<double> x0;
  AngleUnit angle_unit = AngleUnit::Radian;

  // uncertainty
  std::vector<ProfileComponent> theta;

  // verification
  verify::Tolerances tolerances;
  std::size_t dominance_samples = 10000;
  verify::AuditBox audit_box;
  double budget_slack = 1e-6;
  double roll_window_start = 15.0;  ///< missile: |roll| check window [start, T]
  double roll_tol_deg = 0.1;

  std::uint64_t seed = 1;
  std::string output_dir = "runs";
};

/// Reference parameter set for a registered scenario.
ScenarioConfig default_config(const std::string& scenario);

/// Registered scenario names.
std::vector<std::string> registered_scenarios();

struct Scenario {
  ScenarioConfig config;
  sim::ClosedLoopModel model;
  std::vector<double> x0;  ///< radians
  std::vector<double> k0;
  sim::IntegratorSettings settings;

  PlantSpec plant;  ///< pseudo-affine form of the plant
  BoundSpec bounds;
  OracleConstants oracle;  ///< verification only
  UncertaintyProfile theta;
  std::shared_ptr<const Backstepper> controller;  ///< null for the specialised missile autopilot
  std::optional<missile::MissileDesign> missile_design;

  std::vector<sim::CsvColumn> extra_columns;
  nlohmann::json metadata;
};

/// Validates `cfg` and builds the closed loop. Throws ConfigError.
Scenario build_scenario(const ScenarioConfig& cfg);

/// Integrates the scenario from its configured initial condition.
sim::Trajectory simulate(const Scenario& scenario);

// Building blocks of the two-state example, exposed for tests.
PlantSpec numeric2d_plant();
BoundSpec numeric2d_bounds();
/// psi_2 = (1 + 2 mu1 k1) rho2 + 8 gamma1 mu1 z1^2 + Phi1 + 1 + 2 (1 + Phi1 + 2 mu1 k1 Phi1) mu1 k1.
PsiFormula numeric2d_paper_psi2();
/// b = theta lower corner, c = B = theta upper corner.
OracleConstants numeric2d_oracle(const UncertaintyProfile& theta);

}  // namespace pfac
