#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include <pfac/scenario.hpp>
#include <pfac/simkit.hpp>

namespace sim = pfac::sim;

namespace {

// Van der Pol oscillator, mu = 1: smooth, nonlinear, no closed form.
void vdp(double, std::span<const double> y, std::span<double> dy) {
  dy[0] = y[1];
  dy[1] = (1.0 - y[0] * y[0]) * y[1] - y[0];
}

std::vector<double> solve(const sim::OdeRhs& f, std::vector<double> y, double T, double h) {
  const auto steps = static_cast<std::size_t>(std::llround(T / h));
  sim::Rk4 rk(y.size());
  for (std::size_t j = 0; j < steps; ++j) rk.step(f, y, static_cast<double>(j) * h, h);
  return y;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(Rk4, DecayingExponentialOneStep) {
  const auto y = sim::rk4_step([](double, std::span<const double> x, std::span<double> d) { d[0] = -x[0]; },
                               std::vector{1.0}, 0.0, 0.1);
  // 1 - h + h^2/2 - h^3/6 + h^4/24
  EXPECT_NEAR(y[0], 0.9048375, 1e-12);
  EXPECT_LT(std::abs(y[0] - std::exp(-0.1)), 1e-7);
}

TEST(Rk4, ZeroFieldLeavesStateUnchanged) {
  const std::vector<double> y0{1.5, -2.0, 3.25};
  const auto y = sim::rk4_step([](double, std::span<const double>, std::span<double> d) {
    for (auto& v : d) v = 0.0;
  }, y0, 0.0, 0.5);
  EXPECT_EQ(y, y0);
}

TEST(Rk4, ExactOnCubicQuadrature) {
  const auto y = sim::rk4_step([](double t, std::span<const double>, std::span<double> d) { d[0] = t * t * t; },
                               std::vector{0.0}, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(y[0], 0.25);
}

TEST(Rk4, SelfConvergenceOrderIsFour) {
  const std::vector<double> y0{2.0, 0.0};
  const double T = 10.0;
  const auto a = solve(vdp, y0, T, 0.04);
  const auto b = solve(vdp, y0, T, 0.02);
  const auto c = solve(vdp, y0, T, 0.01);
  const double order = std::log2(sup_diff(a, b) / sup_diff(b, c));
  EXPECT_GE(order, 3.7);
  EXPECT_LE(order, 4.3);
}

TEST(Rk4, NonFiniteDerivativeRaisesDivergence) {
  EXPECT_THROW(sim::rk4_step([](double, std::span<const double>, std::span<double> d) { d[0] = NAN; },
                             std::vector{1.0}, 0.0, 0.1),
               sim::DivergenceError);
  EXPECT_THROW(sim::rk4_step(vdp, std::vector{1.0, 0.0}, 0.0, 0.0), std::invalid_argument);
}

TEST(Integrate, EquilibriumIsPreserved) {
  for (auto mode : {pfac::PsiMode::Paper, pfac::PsiMode::Auto}) {
    auto cfg = pfac::default_config("numeric-2d");
    cfg.mode = mode;
    cfg.x0 = {0.0, 0.0};
    cfg.horizon = 10.0;
    const auto traj = pfac::simulate(pfac::build_scenario(cfg));
    ASSERT_TRUE(traj.complete());
    for (const auto& s : traj.samples) {
      for (double v : s.x) ASSERT_LE(std::abs(v), 1e-10);
      ASSERT_EQ(s.k, cfg.k0);
    }
  }
}

TEST(Integrate, SampleCountAndTimes) {
  auto cfg = pfac::default_config("numeric-2d");
  cfg.horizon = 1.0;
  cfg.step = 1e-3;
  cfg.decimation = 10;
  const auto traj = pfac::simulate(pfac::build_scenario(cfg));
  ASSERT_EQ(traj.samples.size(), 101u);
  EXPECT_EQ(traj.samples.front().t, 0.0);
  EXPECT_DOUBLE_EQ(traj.samples.back().t, 1.0);
  EXPECT_DOUBLE_EQ(traj.samples[37].t, 0.37);
}

TEST(Integrate, GainsIntegratedAlongsideTheState) {
  // k' = gamma psi^2 z^2 and the z^2 integral are part of the same RK4 state.
  auto cfg = pfac::default_config("numeric-2d");
  cfg.horizon = 2.0;
  cfg.decimation = 1;
  const auto traj = pfac::simulate(pfac::build_scenario(cfg));
  for (std::size_t j = 1; j < traj.samples.size(); ++j) {
    for (std::size_t i = 0; i < 2; ++i) {
      ASSERT_GE(traj.samples[j].k[i], traj.samples[j - 1].k[i]);
      ASSERT_GE(traj.samples[j].z_sq_integral[i], traj.samples[j - 1].z_sq_integral[i]);
    }
  }
  // trapezoid check of int z1^2 over the recorded grid
  double trap = 0.0;
  for (std::size_t j = 1; j < traj.samples.size(); ++j) {
    const auto& a = traj.samples[j - 1];
    const auto& b = traj.samples[j];
    trap += 0.5 * (b.t - a.t) * (a.z[0] * a.z[0] + b.z[0] * b.z[0]);
  }
  EXPECT_NEAR(traj.samples.back().z_sq_integral[0], trap, 1e-5 * trap);
}

TEST(Integrate, DeterministicCsv) {
  const auto sc = pfac::build_scenario(pfac::default_config("stt-missile"));
  std::ostringstream a, b;
  sim::write_csv(pfac::simulate(sc), a, sc.extra_columns);
  sim::write_csv(pfac::simulate(sc), b, sc.extra_columns);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Integrate, DivergenceIsFlagged) {
  sim::ClosedLoopModel m;
  m.scenario = "blowup";
  m.n = 1;
  m.gains = 1;
  m.plant = [](double, std::span<const double> x, double, std::span<double> dx) { dx[0] = x[0] * x[0]; };
  m.controller = [](double, std::span<const double> x, std::span<const double>) {
    sim::ControlOutput c;
    c.gain_rates = {0.0};
    c.z = {x[0]};
    return c;
  };
  sim::IntegratorSettings s;
  s.horizon = 2.0;
  s.step = 1e-3;
  // x' = x^2, x(0) = 1 blows up at t = 1
  const auto traj = sim::integrate(m, std::vector{1.0}, std::vector{0.0}, s);
  EXPECT_TRUE(traj.diverged);
  EXPECT_FALSE(traj.complete());
  EXPECT_GT(traj.failure_time, 0.9);
  EXPECT_LT(traj.failure_time, 1.01);
}

TEST(Csv, ColumnOrder) {
  auto cfg = pfac::default_config("numeric-2d");
  cfg.mode = pfac::PsiMode::Auto;
  cfg.horizon = 0.01;
  const auto sc = pfac::build_scenario(cfg);
  const auto traj = pfac::simulate(sc);
  EXPECT_EQ(sim::csv_header(traj), (std::vector<std::string>{"t", "x1", "x2", "z1", "z2", "k1", "k2", "u", "psi1",
                                                             "psi2", "eta2"}));
  const auto msc = pfac::build_scenario(pfac::default_config("stt-missile"));
  auto mcfg = pfac::default_config("stt-missile");
  const auto mtraj = pfac::simulate(msc);
  EXPECT_EQ(sim::csv_header(mtraj, msc.extra_columns),
            (std::vector<std::string>{"t", "x1", "x2", "x3", "z1", "z2", "z3", "k2", "k3", "u", "psi3", "roll_deg",
                                      "rate_deg_s", "deflection_deg", "command_deg"}));
}
