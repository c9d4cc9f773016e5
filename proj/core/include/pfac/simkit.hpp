#pragma once

// Fixed-step RK4 integration of the augmented closed loop (plant state x
// and adaptive gains k as one ODE) and trajectory recording.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pfac::sim {

/// A stage evaluation or the state itself stopped being finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double t, std::vector<double> state)
      : std::runtime_error(what), t_(t), state_(std::move(state)) {}
  double time() const noexcept { return t_; }
  const std::vector<double>& state() const noexcept { return state_; }

 private:
  double t_;
  std::vector<double> state_;
};

/// Right-hand side y' = f(t, y) written into `dy`.
using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dy)>;

/// One classical fourth-order Runge-Kutta step. Throws DivergenceError when
/// any stage derivative is non-finite.
std::vector<double> rk4_step(const OdeRhs& rhs, std::span<const double> y, double t, double h);

/// Reusable RK4 stepper that keeps its stage buffers between steps.
class Rk4 {
 public:
  explicit Rk4(std::size_t dim) : k1_(dim), k2_(dim), k3_(dim), k4_(dim), tmp_(dim) {}
  /// Advances y in place from t to t + h.
  void step(const OdeRhs& rhs, std::span<double> y, double t, double h);

 private:
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

/// Controller output at one time instant.
struct ControlOutput {
  double u = 0.0;
  std::vector<double> gain_rates;  ///< one per adaptive gain
  std::vector<double> z;           ///< one per stage
  std::vector<double> psi;
  std::vector<double> eta;
};

/// Everything the integrator needs to run one closed loop.
struct ClosedLoopModel {
  std::string scenario;
  std::size_t n = 0;      ///< plant order
  std::size_t gains = 0;  ///< adaptive gain count
  std::function<void(double t, std::span<const double> x, double u, std::span<double> dx)> plant;
  std::function<ControlOutput(double t, std::span<const double> x, std::span<const double> k)> controller;

  std::vector<std::string> gain_labels;  ///< e.g. k1, k2
  std::vector<std::string> psi_labels;
  std::vector<std::string> eta_labels;
  std::vector<std::size_t> gain_stage;   ///< 0-based z index driving each gain
  std::vector<double> gain_gamma;        ///< gamma of each gain's update law
  double deadzone = 0.0;
};

struct IntegratorSettings {
  double horizon = 10.0;
  double step = 1e-3;
  std::size_t decimation = 1;
  double divergence_threshold = 1e9;

  void validate() const;
  /// Number of RK4 steps, round(horizon / step).
  std::size_t steps() const;
};

struct Sample {
  double t = 0.0;
  std::vector<double> x;
  std::vector<double> z;
  std::vector<double> k;
  double u = 0.0;
  std::vector<double> psi;
  std::vector<double> eta;
  std::vector<double> z_sq_integral;  ///< int_0^t z_i^2, integrated alongside the state
};

struct Trajectory {
  std::string scenario;
  std::uint64_t seed = 0;
  double step = 0.0;
  double horizon = 0.0;
  std::size_t decimation = 1;
  std::size_t n = 0;
  std::vector<std::string> gain_labels;
  std::vector<std::string> psi_labels;
  std::vector<std::string> eta_labels;
  std::vector<std::size_t> gain_stage;
  std::vector<double> gain_gamma;
  double deadzone = 0.0;
  std::vector<Sample> samples;

  bool diverged = false;
  std::string failure;
  double failure_time = 0.0;

  bool complete() const noexcept { return !diverged && !samples.empty(); }
};

/// Integrates the closed loop on [0, horizon] from (x0, k0). Divergence
/// (non-finite stage or any |component| > threshold) ends the run early
/// with `diverged` set and the samples recorded so far.
Trajectory integrate(const ClosedLoopModel& model, std::span<const double> x0, std::span<const double> k0,
                     const IntegratorSettings& settings);

/// Extra CSV column computed from a sample.
struct CsvColumn {
  std::string name;
  std::function<double(const Sample&)> value;
};

/// Columns: t, x1..xn, z1..zn, gains, u, psi..., eta..., then `extra`.
void write_csv(const Trajectory& traj, std::ostream& out, const std::vector<CsvColumn>& extra = {});
std::vector<std::string> csv_header(const Trajectory& traj, const std::vector<CsvColumn>& extra = {});

/// Terminal norms, signal extrema and failure flags.
nlohmann::json summary_json(const Trajectory& traj);

/// Largest |x_i| over samples with t >= t_from.
double tail_sup_norm_x(const Trajectory& traj, double t_from);

}  // namespace pfac::sim
