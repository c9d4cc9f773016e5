#include "pfac/missile.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace pfac::missile {

void MissileParams::validate() const {
  if (!(s > 0.0 && l > 0.0 && Jx > 0.0 && tau_a > 0.0 && rho_air > 0.0)) {
    throw ConfigError("missile: physical constants must be positive (s, l, Jx, tau_a, rho_air)");
  }
  if (flight.size() != 2) throw ConfigError("missile: flight profile needs (speed, slope) components");
  for (const auto& c : flight.components()) {
    if (!(c.lower > 0.0)) throw ConfigError(fmt::format("missile: '{}' must stay positive", c.name));
  }
}

double MissileParams::moment_gain(double speed, double slope) const {
  return rho_air * speed * speed * s * l * slope / (2.0 * Jx);
}

UncertaintyProfile nominal_flight_profile() {
  return UncertaintyProfile({
      ProfileComponent::sinusoid("speed", 200.0, 20.0, 2.0, std::numbers::pi / 2.0, 180.0, 220.0),
      ProfileComponent::sinusoid("moment_slope", 2.12, 0.424, 1.0, 0.0, 2.12 * 0.8, 2.12 * 1.2),
  });
}

void MissileDesign::validate() const {
  if (!(k1 > 0.0 && mu2 > 0.0 && mu3 > 0.0 && gamma2 > 0.0 && gamma3 > 0.0 && k20 > 0.0 && k30 > 0.0 &&
        epsilon > 0.0)) {
    throw ConfigError("missile design: k1, mu2, mu3, gamma2, gamma3, k20, k30 and epsilon must be positive");
  }
  if (!(k1 - 0.75 * epsilon > 0.0)) throw ConfigError("missile design: need k1 - 3 epsilon / 4 > 0");
  if (!xi) throw ConfigError("missile design: xi is undefined");
}

State stt_dynamics(const State& state, double command, double speed, double slope, const MissileParams& params) {
  const auto [roll, rate, deflection] = state;
  (void)roll;
  return {rate, params.moment_gain(speed, slope) * deflection, (command - deflection) / params.tau_a};
}

State stt_dynamics(const State& state, double t, double command, const MissileParams& params) {
  const auto theta = params.flight.eval(t);
  return stt_dynamics(state, command, theta[0], theta[1], params);
}

MissileControl missile_control(const State& state, double k2, double k3, const MissileDesign& design) {
  const auto [roll, rate, deflection] = state;
  MissileControl c;
  c.z1 = roll;
  c.z2 = rate + design.k1 * c.z1;
  c.z3 = deflection + design.mu2 * k2 * c.z2;

  // psi3 reads k2', so the update of k2 is evaluated first.
  c.k2_rate = design.gamma2 * c.z2 * c.z2;
  const double phi2 = design.xi(deflection);
  const double mk2 = design.mu2 * k2;
  c.psi3 = mk2 + design.mu2 * c.k2_rate + phi2 * mk2 * mk2 + 0.5 * phi2 * mk2 +
           mk2 * design.k1 * design.k1 / std::sqrt(design.epsilon) + mk2 * design.k1 + phi2 + 1.0;
  const double psi_sq = c.psi3 * c.psi3;
  c.k3_rate = design.gamma3 * psi_sq * c.z3 * c.z3;
  c.command = -design.mu3 * k3 * psi_sq * c.z3;
  if (design.flip_sign) c.command = -c.command;
  return c;
}

GenericForm generic_form(const MissileParams& params, const MissileDesign& design) {
  params.validate();
  design.validate();
  GenericForm f;
  f.plant.name = "stt-missile";
  f.plant.n = 3;
  f.plant.theta_dim = 2;

  const double tau = params.tau_a;
  const MissileParams p = params;
  f.plant.drift = {
      TowerFunction::constant(0.0),
      TowerFunction::constant(0.0),
      TowerFunction::from([tau]<class S>(std::span<const S> x, std::span<const double>) { return -x[2] / S(tau); }),
  };
  f.plant.gain = {
      TowerFunction::constant(1.0),
      TowerFunction::from([p]<class S>(std::span<const S>, std::span<const double> th) {
        return S(p.moment_gain(th[0], th[1]));
      }),
      TowerFunction::constant(1.0 / tau),
  };

  auto xi = design.xi;
  f.bounds.rho = {TowerFunction::constant(0.0), TowerFunction::constant(0.0), TowerFunction::constant(1.0)};
  // xi is a plain double function; treated as locally constant in the derivative tower.
  f.bounds.gain_bound = {
      TowerFunction::constant(1.0),
      TowerFunction::from([xi]<class S>(std::span<const S> x, std::span<const double>) {
        return S(xi(ad::value_of(x[2])));
      }),
  };

  // Extremes of the moment gain over the declared flight box.
  const auto& comps = params.flight.components();
  const double g_min = params.moment_gain(comps[0].lower, comps[1].lower);
  const double g_max = params.moment_gain(comps[0].upper, comps[1].upper);
  double xi_min = design.xi(0.0);
  for (double d = -1.0; d <= 1.0; d += 1e-3) xi_min = std::min(xi_min, design.xi(d));
  f.oracle.b = {1.0, g_min, 1.0 / tau};
  f.oracle.B = {1.0, g_max / xi_min, 1.0 / tau};
  f.oracle.c = {0.0, 0.0, 1.0 / tau};
  return f;
}

}  // namespace pfac::missile
