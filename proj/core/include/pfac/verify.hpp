#pragma once

// Runtime monitors for the closed-loop stability claims, computed from a
// recorded trajectory and the scenario's true constants. Nothing in here is
// visible to the controller.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfac/backstep.hpp"
#include "pfac/plant.hpp"
#include "pfac/simkit.hpp"

namespace pfac::verify {

struct CheckResult {
  std::string name;
  bool applicable = true;
  bool passed = false;
  double worst_margin = 0.0;  ///< threshold - observed; negative means failed
  double at_time = 0.0;
  std::string detail;
};

struct InvariantReport {
  std::vector<CheckResult> checks;
  double tail_x_inf = 0.0;
  double tail_z_inf = 0.0;
  std::vector<double> gain_settle_delta;
  std::vector<double> max_abs_x;
  std::vector<double> max_abs_k;
  double max_abs_u = 0.0;

  /// True iff every check was applicable and passed.
  bool passed() const;
  const CheckResult* find(const std::string& name) const;
};

struct Tolerances {
  double tol_x = 1e-2;            ///< tail sup-norm of x over the last 10% of the horizon
  double tol_k = 1e-3;            ///< k_i(T) - k_i(0.9 T)
  double bound = 1e9;             ///< every recorded signal must stay below this
  double monotone_slack = 1e-12;  ///< allowed per-sample decrease of k_i
  double tail_fraction = 0.1;
};

/// Boundedness, tail convergence of x, monotone settled gains, and the
/// integral-of-z^2 (Barbalat) checks. An incomplete trajectory yields
/// non-applicable checks, never a pass.
InvariantReport check_theorem1(const sim::Trajectory& traj, const Tolerances& tol = {});

/// Box for sampling (z, k) in the dominance audit.
struct AuditBox {
  double z_max = 5.0;
  double k_min = 0.01;
  double k_max = 10.0;
};

struct DominanceReport {
  std::size_t stage = 0;
  std::size_t samples = 0;
  std::size_t violations = 0;
  double min_slack = 0.0;  ///< min over samples of rhs - lhs
  std::vector<double> worst_z;
  std::vector<double> worst_k;
  std::vector<double> worst_theta;
};

/// At sampled (z, k, theta): the true uncertain bracket
///   |phi_i| + sum_{j<i} [ |da/dx_j| (|phi_j| + g_j |x_{j+1}|) + gamma_j |da/dk_j| psi_j^2 z_j^2 ]
/// must not exceed vartheta_i eta_i sum|z_j|. `vartheta_override` replaces
/// vartheta_i (negative controls).
DominanceReport dominance_audit(const Backstepper& controller, const PlantSpec& plant, const OracleConstants& oracle,
                                const UncertaintyProfile& theta_box, std::size_t stage, std::size_t samples,
                                const AuditBox& box, std::uint64_t seed, double vartheta_override = -1.0);

struct BudgetReport {
  bool applicable = true;
  bool passed = false;
  double epsilon = 0.0;
  double c0 = 0.0;
  double max_violation = 0.0;  ///< max over samples of V - budget
  double at_time = 0.0;
  std::size_t samples = 0;
};

/// V(t) = 1/2 sum z_i^2 against
///   -1/2 sum (b_i mu_i / gamma_i) k_i^2 + 2 eps sum k_i / gamma_i + C0,
/// with C0 fitted at t = 0 and eps from the oracle. `mu` and `gamma` are
/// passed explicitly so a checker can be run with perturbed values.
BudgetReport lyapunov_budget(const sim::Trajectory& traj, const OracleConstants& oracle, std::span<const double> mu,
                             std::span<const double> gamma, double slack = 1e-6);

/// Randomization of a Monte-Carlo sweep.
struct MonteCarloSpec {
  std::size_t runs = 100;
  std::uint64_t seed = 1;
  std::vector<double> x0_lower;
  std::vector<double> x0_upper;
  std::vector<double> theta_lower;  ///< per-component box for the random profiles
  std::vector<double> theta_upper;
  unsigned workers = 0;  ///< 0: hardware concurrency
};

/// One randomized draw: initial state and a box-bounded sinusoidal profile.
struct MonteCarloDraw {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::vector<double> x0;
  UncertaintyProfile theta;
};

struct MonteCarloRun {
  MonteCarloDraw draw;
  bool completed = false;
  bool passed = false;
  double tail_x_inf = 0.0;
  std::vector<double> final_k;
  std::string failure;
};

struct MonteCarloReport {
  std::size_t runs = 0;
  std::size_t passed = 0;
  std::uint64_t seed = 0;
  std::vector<MonteCarloRun> results;  ///< ordered by draw index
  double pass_rate() const { return runs ? static_cast<double>(passed) / static_cast<double>(runs) : 0.0; }
};

/// Draw `index` of a sweep, a pure function of (spec.seed, index).
MonteCarloDraw monte_carlo_draw(const MonteCarloSpec& spec, std::size_t index);

/// Runs `simulate` on every draw (in parallel workers), checks each
/// trajectory and aggregates in draw order. Throws std::invalid_argument
/// for runs == 0.
MonteCarloReport monte_carlo(const MonteCarloSpec& spec,
                             const std::function<sim::Trajectory(const MonteCarloDraw&)>& simulate,
                             const Tolerances& tol = {});

nlohmann::json to_json(const InvariantReport& r);
nlohmann::json to_json(const DominanceReport& r);
nlohmann::json to_json(const BudgetReport& r);
nlohmann::json to_json(const MonteCarloReport& r);

}  // namespace pfac::verify
