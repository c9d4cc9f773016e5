#include "pfac/scenario.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace pfac {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

const char* mode_name(PsiMode m) { return m == PsiMode::Auto ? "auto" : "paper"; }

nlohmann::json profile_json(const UncertaintyProfile& p) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : p.components()) {
    j.push_back({{"name", c.name},
                 {"offset", c.offset},
                 {"amplitude", c.amplitude},
                 {"omega", c.omega},
                 {"phase", c.phase},
                 {"lower", c.lower},
                 {"upper", c.upper}});
  }
  return j;
}

sim::ClosedLoopModel generic_model(const std::string& name, const PlantSpec& plant, const UncertaintyProfile& theta,
                                   std::shared_ptr<const Backstepper> ctrl,
                                   std::function<void(double, std::span<const double>, double, std::span<double>)>
                                       dynamics) {
  const std::size_t n = plant.n;
  sim::ClosedLoopModel m;
  m.scenario = name;
  m.n = n;
  m.gains = n;
  if (dynamics) {
    m.plant = std::move(dynamics);
  } else {
    m.plant = [plant, theta](double t, std::span<const double> x, double u, std::span<double> dx) {
      const auto th = theta.eval(t);
      plant.rhs(x, u, th, dx);
    };
  }
  m.controller = [ctrl](double, std::span<const double> x, std::span<const double> k) {
    ControlSnapshot s = ctrl->evaluate(x, k);
    sim::ControlOutput out;
    out.u = s.u;
    out.gain_rates = std::move(s.gain_rate);
    out.z = std::move(s.z);
    out.psi = std::move(s.psi);
    out.eta = std::move(s.eta);
    return out;
  };
  for (std::size_t i = 0; i < n; ++i) {
    m.gain_labels.push_back(fmt::format("k{}", i + 1));
    m.psi_labels.push_back(fmt::format("psi{}", i + 1));
    if (i >= 1) m.eta_labels.push_back(fmt::format("eta{}", i + 1));
    m.gain_stage.push_back(i);
    m.gain_gamma.push_back(ctrl->params().gamma[i]);
  }
  m.deadzone = ctrl->params().deadzone;
  return m;
}

DesignParams design_from(const ScenarioConfig& cfg, int default_power) {
  DesignParams p;
  p.mu = cfg.mu;
  p.gamma = cfg.gamma;
  p.k0 = cfg.k0;
  p.deadzone = cfg.deadzone;
  p.smoothing = cfg.smoothing;
  p.mode = cfg.mode;
  p.psi_power = cfg.psi_power == 0 ? default_power : cfg.psi_power;
  p.flip_sign = cfg.sabotage;
  return p;
}

Scenario build_numeric2d(const ScenarioConfig& cfg) {
  Scenario sc;
  sc.config = cfg;
  sc.plant = numeric2d_plant();
  sc.bounds = numeric2d_bounds();
  if (cfg.theta.size() != 2) throw ConfigError("numeric-2d: theta needs 2 components");
  sc.theta = UncertaintyProfile(cfg.theta);
  sc.oracle = numeric2d_oracle(sc.theta);
  sc.oracle.validate();

  // The example's own control laws use psi unsquared; the general synthesis squares it.
  const int default_power = cfg.mode == PsiMode::Paper ? 1 : 2;
  const DesignParams design = design_from(cfg, default_power);
  std::vector<PsiFormula> formulas;
  if (cfg.mode == PsiMode::Paper) {
    formulas = {PsiFormula{}, numeric2d_paper_psi2()};
  }
  sc.controller = std::make_shared<const Backstepper>(sc.bounds, design, formulas);

  if (cfg.x0.size() != 2) throw ConfigError("numeric-2d: init.x needs 2 entries");
  if (cfg.angle_unit != AngleUnit::Radian) throw ConfigError("numeric-2d: init.units must be 'rad' (no angles)");
  sc.x0 = cfg.x0;
  sc.k0 = cfg.k0;
  sc.model = generic_model("numeric-2d", sc.plant, sc.theta, sc.controller, nullptr);
  sc.metadata = {{"scenario", "numeric-2d"},
                 {"mode", mode_name(cfg.mode)},
                 {"alpha_form", fmt::format("alpha_i = -mu_i k_i psi_i^{} z_i", design.psi_power)},
                 {"update_law", "k_i' = gamma_i psi_i^2 z_i^2"},
                 {"psi2", cfg.mode == PsiMode::Paper ? "closed-form example formula" : "eta_2 + Phi_1 + 1"}};
  return sc;
}

Scenario build_missile(const ScenarioConfig& cfg) {
  Scenario sc;
  sc.config = cfg;
  missile::MissileParams mp;
  mp.s = cfg.missile_s;
  mp.l = cfg.missile_l;
  mp.Jx = cfg.missile_Jx;
  mp.tau_a = cfg.missile_tau_a;
  mp.rho_air = cfg.missile_rho_air;
  if (cfg.theta.size() != 2) throw ConfigError("stt-missile: theta needs (speed, moment_slope) components");
  mp.flight = UncertaintyProfile(cfg.theta);
  mp.validate();
  sc.theta = mp.flight;

  missile::MissileDesign md;
  md.k1 = cfg.missile_k1;
  md.epsilon = cfg.missile_epsilon;
  const double xi = cfg.missile_xi;
  if (!(xi > 0.0)) throw ConfigError("stt-missile: missile.xi must be positive");
  md.xi = [xi](double) { return xi; };
  md.flip_sign = cfg.sabotage;

  if (cfg.x0.size() != 3) throw ConfigError("stt-missile: init.x needs (roll, rate, deflection)");
  sc.x0 = cfg.x0;
  if (cfg.angle_unit == AngleUnit::Degree) {
    for (auto& v : sc.x0) v *= kDeg;
  }

  auto dynamics = [mp](double t, std::span<const double> x, double u, std::span<double> dx) {
    const auto d = missile::stt_dynamics({x[0], x[1], x[2]}, t, u, mp);
    dx[0] = d[0];
    dx[1] = d[1];
    dx[2] = d[2];
  };

  if (cfg.mode == PsiMode::Paper) {
    if (cfg.mu.size() != 2 || cfg.gamma.size() != 2 || cfg.k0.size() != 2) {
      throw ConfigError("stt-missile: controller.mu, gamma and k0 need 2 entries (stages 2 and 3)");
    }
    md.mu2 = cfg.mu[0];
    md.mu3 = cfg.mu[1];
    md.gamma2 = cfg.gamma[0];
    md.gamma3 = cfg.gamma[1];
    md.k20 = cfg.k0[0];
    md.k30 = cfg.k0[1];
    md.validate();
    if (cfg.deadzone != 0.0) throw ConfigError("stt-missile: the specialised autopilot has no dead zone option");
    sc.missile_design = md;
    sc.k0 = cfg.k0;

    sim::ClosedLoopModel m;
    m.scenario = "stt-missile";
    m.n = 3;
    m.gains = 2;
    m.plant = dynamics;
    m.controller = [md](double, std::span<const double> x, std::span<const double> k) {
      const auto c = missile::missile_control({x[0], x[1], x[2]}, k[0], k[1], md);
      sim::ControlOutput out;
      out.u = c.command;
      out.gain_rates = {c.k2_rate, c.k3_rate};
      out.z = {c.z1, c.z2, c.z3};
      out.psi = {c.psi3};
      return out;
    };
    m.gain_labels = {"k2", "k3"};
    m.psi_labels = {"psi3"};
    m.gain_stage = {1, 2};
    m.gain_gamma = {md.gamma2, md.gamma3};
    sc.model = std::move(m);
    auto generic = missile::generic_form(mp, md);
    sc.plant = std::move(generic.plant);
    sc.bounds = std::move(generic.bounds);
    sc.oracle = std::move(generic.oracle);
  } else {
    auto generic = missile::generic_form(mp, md);
    sc.plant = std::move(generic.plant);
    sc.bounds = std::move(generic.bounds);
    sc.oracle = std::move(generic.oracle);
    const DesignParams design = design_from(cfg, 2);
    sc.controller = std::make_shared<const Backstepper>(sc.bounds, design);
    sc.k0 = cfg.k0;
    sc.model = generic_model("stt-missile", sc.plant, sc.theta, sc.controller, dynamics);
  }

  const double to_deg = 1.0 / kDeg;
  sc.extra_columns = {
      {"roll_deg", [to_deg](const sim::Sample& s) { return s.x[0] * to_deg; }},
      {"rate_deg_s", [to_deg](const sim::Sample& s) { return s.x[1] * to_deg; }},
      {"deflection_deg", [to_deg](const sim::Sample& s) { return s.x[2] * to_deg; }},
      {"command_deg", [to_deg](const sim::Sample& s) { return s.u * to_deg; }},
  };
  sc.metadata = {{"scenario", "stt-missile"},
                 {"mode", mode_name(cfg.mode)},
                 {"controller", cfg.mode == PsiMode::Paper ? "specialised three-step autopilot"
                                                           : "general synthesis on the pseudo-affine form"},
                 {"angles", "radians internally; *_deg columns in degrees"},
                 {"actuator", "tau_a > 0 (stable first-order lag)"}};
  return sc;
}

}  // namespace

PlantSpec numeric2d_plant() {
  PlantSpec p;
  p.name = "numeric-2d";
  p.n = 2;
  p.theta_dim = 2;
  p.drift = {
      TowerFunction::from([]<class S>(std::span<const S> x, std::span<const double> th) { return S(th[0]) * x[0]; }),
      TowerFunction::from(
          []<class S>(std::span<const S> x, std::span<const double> th) { return S(th[1]) * x[0] * x[1]; }),
  };
  p.gain = {
      TowerFunction::from([]<class S>(std::span<const S> x, std::span<const double> th) {
        return S(th[0]) * (S(1.0) + x[1] * x[1] / S(5.0));
      }),
      TowerFunction::from([]<class S>(std::span<const S> x, std::span<const double> th) {
        return S(th[1]) * (S(1.0) + x[2] * x[2] / S(7.0));
      }),
  };
  return p;
}

BoundSpec numeric2d_bounds() {
  BoundSpec b;
  b.rho = {
      TowerFunction::constant(1.0),
      TowerFunction::from([]<class S>(std::span<const S> x, std::span<const double>) {
        return (S(1.0) + x[0] * x[0] + x[1] * x[1]) / S(4.0);
      }),
  };
  b.gain_bound = {
      TowerFunction::from(
          []<class S>(std::span<const S> x, std::span<const double>) { return S(1.0) + x[1] * x[1] / S(5.0); }),
      TowerFunction::from(
          []<class S>(std::span<const S> x, std::span<const double>) { return S(1.0) + x[2] * x[2] / S(7.0); }),
  };
  return b;
}

PsiFormula numeric2d_paper_psi2() {
  return [](const PsiContext& c) {
    const double mu1 = c.params.mu[0];
    const double g1 = c.params.gamma[0];
    const double k1 = c.k[0];
    const double z1 = c.z[0];
    const double rho2 = c.bounds.rho[1](c.x.first(2));
    const double phi1 = c.bounds.gain_bound[0](c.x.first(2));
    return (1.0 + 2.0 * mu1 * k1) * rho2 + 8.0 * g1 * mu1 * z1 * z1 + phi1 + 1.0 +
           2.0 * (1.0 + phi1 + 2.0 * mu1 * k1 * phi1) * mu1 * k1;
  };
}

OracleConstants numeric2d_oracle(const UncertaintyProfile& theta) {
  OracleConstants o;
  for (const auto& c : theta.components()) {
    o.b.push_back(c.lower);
    o.B.push_back(c.upper);
    o.c.push_back(c.upper);
  }
  return o;
}

std::vector<std::string> registered_scenarios() { return {"numeric-2d", "stt-missile"}; }

ScenarioConfig default_config(const std::string& scenario) {
  ScenarioConfig c;
  c.scenario = scenario;
  if (scenario == "numeric-2d") {
    c.mode = PsiMode::Paper;
    c.mu = {0.2, 0.2};
    c.gamma = {0.2, 0.2};
    c.k0 = {0.01, 0.01};
    c.horizon = 100.0;
    c.step = 1e-3;
    c.decimation = 10;
    c.x0 = {-2.0, 3.0};
    c.theta = {ProfileComponent::constant("theta1", 1.0, 1.0, 1.0),
               ProfileComponent::constant("theta2", 2.0, 2.0, 2.0)};
  } else if (scenario == "stt-missile") {
    c.mode = PsiMode::Paper;
    c.mu = {0.5, 0.5};
    c.gamma = {0.1, 0.1};
    c.k0 = {0.1, 0.1};
    c.horizon = 20.0;
    c.step = 1e-3;
    c.decimation = 10;
    c.x0 = {10.0, 0.0, 0.0};
    c.angle_unit = AngleUnit::Degree;
    c.theta = missile::nominal_flight_profile().components();
  } else {
    throw ConfigError(fmt::format("unknown scenario '{}'", scenario));
  }
  return c;
}

Scenario build_scenario(const ScenarioConfig& cfg) {
  if (!(cfg.horizon > 0.0) || !(cfg.step > 0.0) || cfg.decimation == 0) {
    throw ConfigError("sim: horizon and step must be positive, decimation >= 1");
  }
  Scenario sc;
  if (cfg.scenario == "numeric-2d") {
    sc = build_numeric2d(cfg);
  } else if (cfg.scenario == "stt-missile") {
    sc = build_missile(cfg);
  } else {
    throw ConfigError(fmt::format("unknown scenario '{}'", cfg.scenario));
  }
  sc.settings.horizon = cfg.horizon;
  sc.settings.step = cfg.step;
  sc.settings.decimation = cfg.decimation;
  sc.metadata["theta"] = profile_json(sc.theta);
  sc.metadata["sabotage"] = cfg.sabotage;
  sc.metadata["deadzone"] = cfg.deadzone;
  return sc;
}

sim::Trajectory simulate(const Scenario& scenario) {
  sim::Trajectory t = sim::integrate(scenario.model, scenario.x0, scenario.k0, scenario.settings);
  t.seed = scenario.config.seed;
  return t;
}

}  // namespace pfac
