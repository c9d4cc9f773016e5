// End-to-end acceptance gate: one PASS/FAIL line per criterion, exit status 1
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include <pfac/autodiff.hpp>
#include <pfac/scenario.hpp>
#include <pfac/verify.hpp>

namespace v = pfac::verify;
using pfac::PsiMode;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Timed {
  pfac::sim::Trajectory traj;
  double seconds = 0.0;
};

Timed timed_run(const pfac::ScenarioConfig& cfg) {
  const auto sc = pfac::build_scenario(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  Timed t{pfac::simulate(sc), 0.0};
  t.seconds = seconds_since(t0);
  return t;
}

bool check_ok(const v::InvariantReport& r, const char* name) {
  const auto* c = r.find(name);
  return c && c->applicable && c->passed;
}

Outcome numeric_reproduction() {
  const auto cfg = pfac::default_config("numeric-2d");
  const auto run = timed_run(cfg);
  const auto rep = v::check_theorem1(run.traj, {});
  const bool ok = check_ok(rep, "tail_convergence") && check_ok(rep, "gains_monotone_settled") &&
                  run.seconds <= 10.0 && run.traj.complete();
  const auto& k = run.traj.samples.back().k;
  return {ok, fmt::format("tail sup|x| = {:.3e} (<= 1e-2), k(T) = ({:.4f}, {:.4f}), settle = ({:.1e}, {:.1e}) "
                          "(<= 1e-3), runtime {:.2f} s (<= 10)",
                          rep.tail_x_inf, k[0], k[1], rep.gain_settle_delta[0], rep.gain_settle_delta[1],
                          run.seconds)};
}

Outcome missile_reproduction() {
  const auto cfg = pfac::default_config("stt-missile");
  const auto run = timed_run(cfg);
  const auto rep = v::check_theorem1(run.traj, {});
  double worst_deg = 0.0;
  for (const auto& s : run.traj.samples) {
    if (s.t + 1e-12 >= 15.0) worst_deg = std::max(worst_deg, std::abs(s.x[0]) * 180.0 / std::numbers::pi);
  }
  const bool ok = run.traj.complete() && worst_deg <= 0.1 && check_ok(rep, "bounded") &&
                  check_ok(rep, "gains_monotone_settled") && run.seconds <= 30.0;
  return {ok, fmt::format("max |roll| on [15, 20] s = {:.3e} deg (<= 0.1), bounded = {}, k2/k3 monotone+settled = "
                          "{}, runtime {:.2f} s (<= 30)",
                          worst_deg, check_ok(rep, "bounded"), check_ok(rep, "gains_monotone_settled"), run.seconds)};
}

Outcome auto_parity() {
  auto cfg = pfac::default_config("numeric-2d");
  cfg.mode = PsiMode::Auto;
  const auto run = timed_run(cfg);
  const auto rep = v::check_theorem1(run.traj, {});
  const bool ok = check_ok(rep, "tail_convergence") && check_ok(rep, "gains_monotone_settled") &&
                  run.seconds <= 10.0;
  const auto& k = run.traj.samples.back().k;
  return {ok, fmt::format("tail sup|x| = {:.3e} (<= 1e-2), k(T) = ({:.4f}, {:.4f}), settle = ({:.1e}, {:.1e}), "
                          "runtime {:.2f} s",
                          rep.tail_x_inf, k[0], k[1], rep.gain_settle_delta[0], rep.gain_settle_delta[1],
                          run.seconds)};
}

pfac::Scenario auto_scenario() {
  auto cfg = pfac::default_config("numeric-2d");
  cfg.mode = PsiMode::Auto;
  return pfac::build_scenario(cfg);
}

Outcome dominance() {
  const auto sc = auto_scenario();
  const auto rep = v::dominance_audit(*sc.controller, sc.plant, sc.oracle, sc.theta, 2, 10000, {5.0, 0.01, 10.0}, 1);
  return {rep.samples == 10000 && rep.violations == 0,
          fmt::format("stage 2: {} violations over {} samples, min slack {:.3e}", rep.violations, rep.samples,
                      rep.min_slack)};
}

Outcome lyapunov() {
  const auto cfg = pfac::default_config("numeric-2d");
  const auto sc = pfac::build_scenario(cfg);
  const auto traj = pfac::simulate(sc);
  const auto rep = v::lyapunov_budget(traj, sc.oracle, cfg.mu, cfg.gamma, 1e-6);
  return {rep.applicable && rep.passed && rep.max_violation <= 1e-6,
          fmt::format("max(V - budget) = {:.3e} over {} samples (<= 1e-6), eps = {}, C0 = {:.4f}", rep.max_violation,
                      rep.samples, rep.epsilon, rep.c0)};
}

Outcome autodiff() {
  using D = pfac::ad::Dual<double>;
  std::mt19937_64 rng(2024);
  double worst_rel = 0.0;

  auto central = [](const std::function<double(const std::vector<double>&)>& f, std::vector<double> p,
                    std::size_t i) {
    const double h = 1e-6;
    const double p0 = p[i];
    p[i] = p0 + h;
    const double a = f(p);
    p[i] = p0 - h;
    const double b = f(p);
    return (a - b) / (2.0 * h);
  };
  auto rel = [](const std::vector<double>& ad, const std::vector<double>& fd) {
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < ad.size(); ++i) {
      diff = std::max(diff, std::abs(ad[i] - fd[i]));
      scale = std::max(scale, std::abs(fd[i]));
    }
    return diff / std::max(scale, 1e-300);
  };

  // (a) a closed-form test function
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const std::function<double(const std::vector<double>&)> f = [](const std::vector<double>& p) {
    return std::sin(p[0]) * p[1] + p[1] * p[1] * p[1] + std::exp(0.3 * p[0] * p[1]);
  };
  for (int s = 0; s < 1000; ++s) {
    const std::vector<double> p{u(rng), u(rng)};
    const auto g = pfac::ad::gradient(
        [](std::span<const D> x) { return sin(x[0]) * x[1] + x[1] * x[1] * x[1] + exp(0.3 * x[0] * x[1]); }, p);
    std::vector<double> fd;
    for (std::size_t i = 0; i < 2; ++i) fd.push_back(central(f, p, i));
    worst_rel = std::max(worst_rel, rel(g.partials, fd));
  }

  // (b) the synthesized second virtual control alpha_2(x1, x2, k1, k2)
  const auto sc = auto_scenario();
  std::uniform_real_distribution<double> xs(-3.0, 3.0), ks(0.01, 10.0);
  const std::function<double(const std::vector<double>&)> alpha2 = [&sc](const std::vector<double>& p) {
    return sc.controller->alpha(2, std::span<const double>(p).first(2), std::span<const double>(p).subspan(2));
  };
  for (int s = 0; s < 1000; ++s) {
    const std::vector<double> p{xs(rng), xs(rng), ks(rng), ks(rng)};
    const auto jet = sc.controller->alpha_jet(2, std::span<const double>(p).first(2),
                                              std::span<const double>(p).subspan(2));
    std::vector<double> ad(jet.d_dx);
    ad.insert(ad.end(), jet.d_dk.begin(), jet.d_dk.end());
    std::vector<double> fd;
    for (std::size_t i = 0; i < 4; ++i) fd.push_back(central(alpha2, p, i));
    worst_rel = std::max(worst_rel, rel(ad, fd));
  }

  // (c) nested second derivatives of random quintics
  double worst_poly = 0.0;
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  for (int s = 0; s < 1000; ++s) {
    double a[6];
    for (double& c : a) c = coef(rng);
    const double x = u(rng);
    auto poly = [&a](auto t) {
      auto r = decltype(t)(a[5]);
      for (int i = 4; i >= 0; --i) r = r * t + decltype(t)(a[i]);
      return r;
    };
    const double exact = 2 * a[2] + 6 * a[3] * x + 12 * a[4] * x * x + 20 * a[5] * x * x * x;
    worst_poly = std::max(worst_poly,
                          std::abs(pfac::ad::second_derivative(poly, x) - exact) / std::max(1.0, std::abs(exact)));
  }
  return {worst_rel <= 1e-6 && worst_poly <= 1e-12,
          fmt::format("first partials vs central FD: worst rel. err {:.3e} (<= 1e-6, 2000 points); quintic "
                      "second derivatives: worst err {:.3e} (<= 1e-12)",
                      worst_rel, worst_poly)};
}

Outcome integrator_order() {
  auto vdp = [](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = y[1];
    dy[1] = (1.0 - y[0] * y[0]) * y[1] - y[0];
  };
  auto solve = [&](double h) {
    std::vector<double> y{2.0, 0.0};
    pfac::sim::Rk4 rk(2);
    const auto steps = static_cast<std::size_t>(std::llround(10.0 / h));
    for (std::size_t j = 0; j < steps; ++j) rk.step(vdp, y, static_cast<double>(j) * h, h);
    return y;
  };
  const auto a = solve(0.04), b = solve(0.02), c = solve(0.01);
  auto diff = [](const std::vector<double>& p, const std::vector<double>& q) {
    return std::max(std::abs(p[0] - q[0]), std::abs(p[1] - q[1]));
  };
  const double order = std::log2(diff(a, b) / diff(b, c));
  return {order >= 3.7 && order <= 4.3,
          fmt::format("Van der Pol, T = 10, h = 0.04/0.02/0.01: measured order {:.3f} (in [3.7, 4.3])", order)};
}

Outcome monte_carlo() {
  v::MonteCarloSpec spec;
  spec.runs = 100;
  spec.seed = 1;
  spec.x0_lower = {-3.0, -3.0};
  spec.x0_upper = {3.0, 3.0};
  spec.theta_lower = {0.8, 1.6};
  spec.theta_upper = {1.2, 2.4};
  auto simulate = [](const v::MonteCarloDraw& d) {
    auto cfg = pfac::default_config("numeric-2d");
    cfg.x0 = d.x0;
    cfg.theta = d.theta.components();
    return pfac::simulate(pfac::build_scenario(cfg));
  };
  spec.workers = 0;
  const auto first = v::monte_carlo(spec, simulate);
  spec.workers = 2;
  const auto second = v::monte_carlo(spec, simulate);
  const bool same = v::to_json(first) == v::to_json(second);
  return {first.passed == 100 && same,
          fmt::format("{}/{} runs pass check_theorem1; repeat with a different worker count identical = {}",
                      first.passed, first.runs, same)};
}

Outcome equilibrium() {
  double worst_x = 0.0;
  bool k_const = true;
  bool complete = true;
  std::vector<pfac::ScenarioConfig> cfgs;
  for (auto mode : {PsiMode::Paper, PsiMode::Auto}) {
    auto c = pfac::default_config("numeric-2d");
    c.mode = mode;
    c.x0 = {0.0, 0.0};
    cfgs.push_back(c);
  }
  auto m = pfac::default_config("stt-missile");
  m.x0 = {0.0, 0.0, 0.0};
  cfgs.push_back(m);
  for (auto& c : cfgs) {
    c.horizon = 10.0;
    const auto traj = pfac::simulate(pfac::build_scenario(c));
    complete = complete && traj.complete();
    for (const auto& s : traj.samples) {
      for (double x : s.x) worst_x = std::max(worst_x, std::abs(x));
      if (s.k != c.k0) k_const = false;
    }
  }
  return {complete && worst_x <= 1e-10 && k_const,
          fmt::format("numeric-2d paper/auto and missile, T = 10 s: max |x| = {:.1e} (<= 1e-10), gains constant = {}",
                      worst_x, k_const)};
}

Outcome negative_controls() {
  auto cfg = pfac::default_config("numeric-2d");
  cfg.sabotage = true;
  const auto traj = pfac::simulate(pfac::build_scenario(cfg));
  const auto rep = v::check_theorem1(traj, {});
  const bool sabotage_caught = !rep.passed();

  const auto sc = auto_scenario();
  const auto dom =
      v::dominance_audit(*sc.controller, sc.plant, sc.oracle, sc.theta, 2, 10000, {5.0, 0.01, 10.0}, 1, 0.0);
  const bool zeroed_caught = dom.violations > 0;

  std::string how = traj.diverged ? fmt::format("diverged at t = {:.3f} s", traj.failure_time)
                                  : fmt::format("tail sup|x| = {:.3e}", rep.tail_x_inf);
  return {sabotage_caught && zeroed_caught,
          fmt::format("sign-flipped controller rejected = {} ({}); zeroed-vartheta audit: {} / {} violations",
                      sabotage_caught, how, dom.violations, dom.samples)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"numeric-2d reproduction", numeric_reproduction},
      {"stt-missile reproduction", missile_reproduction},
      {"auto psi parity", auto_parity},
      {"dominance audit", dominance},
      {"lyapunov budget", lyapunov},
      {"autodiff correctness", autodiff},
      {"integrator order", integrator_order},
      {"monte-carlo robustness", monte_carlo},
      {"equilibrium preservation", equilibrium},
      {"negative controls", negative_controls},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    if (!o.pass) ++failed;
    fmt::print("{} {}: {}\n", o.pass ? "PASS" : "FAIL", c.name, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", std::size(criteria) - static_cast<std::size_t>(failed), std::size(criteria));
  return failed == 0 ? 0 : 1;
}
