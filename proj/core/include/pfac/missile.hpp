#pragma once

// Roll channel of an axially symmetric skid-to-turn missile with a
// first-order aileron actuator, and the three-step adaptive autopilot
// specialised to its structure.
//
//   roll'       = rate
//   rate'       = rho V(t)^2 s l m(t) / (2 Jx) * deflection
//   deflection' = (command - deflection) / tau_a
//
// All angles are radians internally.

#include <array>
#include <functional>

#include "pfac/backstep.hpp"
#include "pfac/plant.hpp"

namespace pfac::missile {

/// Airframe constants and the two time-varying flight quantities.
/// `flight` has two components: speed V(t) [m/s] and the roll-moment
/// slope m(t) [1/rad].
struct MissileParams {
  double s = 0.42;         ///< reference area [m^2]
  double l = 0.68;         ///< reference length [m]
  double Jx = 100.0;       ///< roll inertia [kg m^2]
  double tau_a = 0.01;     ///< actuator time constant [s]
  double rho_air = 0.7361; ///< air density at 5 km [kg/m^3]
  UncertaintyProfile flight;

  void validate() const;
  /// rho V^2 s l m / (2 Jx) for given speed and slope.
  double moment_gain(double speed, double slope) const;
};

/// The nominal flight profile: V = 200 (1 + 0.1 cos 2t), m = 2.12 (1 + 0.2 sin t).
UncertaintyProfile nominal_flight_profile();

struct MissileDesign {
  double k1 = 5.0;
  double mu2 = 0.5;
  double mu3 = 0.5;
  double gamma2 = 0.1;
  double gamma3 = 0.1;
  double k20 = 0.1;
  double k30 = 0.1;
  double epsilon = 0.1;
  /// xi(deflection) > 0: upper shape of the moment slope. Constant 1 by default.
  std::function<double(double)> xi = [](double) { return 1.0; };
  bool flip_sign = false;  ///< Mutation hook for negative controls.

  /// Requires positive gains and k1 - 3 epsilon / 4 > 0.
  void validate() const;
};

using State = std::array<double, 3>;  ///< (roll, rate, deflection)

/// Plant derivative at time t with actuator command `command`.
State stt_dynamics(const State& state, double t, double command, const MissileParams& params);
/// Same with the flight quantities supplied directly.
State stt_dynamics(const State& state, double command, double speed, double slope, const MissileParams& params);

struct MissileControl {
  double command = 0.0;
  double k2_rate = 0.0;
  double k3_rate = 0.0;
  double z1 = 0.0;
  double z2 = 0.0;
  double z3 = 0.0;
  double psi3 = 0.0;
};

/// z1 = roll, z2 = rate + k1 z1, z3 = deflection + mu2 k2 z2; k2' = gamma2 z2^2,
/// psi3 (which uses k2'), k3' = gamma3 psi3^2 z3^2, command = -mu3 k3 psi3^2 z3.
MissileControl missile_control(const State& state, double k2, double k3, const MissileDesign& design);

/// The same airframe in pseudo-affine form with theta = (V, m) and the
/// bound choice rho = (0, 0, 1), Phi = (1, xi), for the generic tools.
struct GenericForm {
  PlantSpec plant;
  BoundSpec bounds;
  OracleConstants oracle;
};
GenericForm generic_form(const MissileParams& params, const MissileDesign& design);

}  // namespace pfac::missile
