#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include <pfac/missile.hpp>
#include <pfac/plant.hpp>

namespace m = pfac::missile;

namespace {

m::MissileParams nominal() {
  m::MissileParams p;
  p.flight = m::nominal_flight_profile();
  return p;
}

}  // namespace

TEST(SttDynamics, EquilibriumAtRest) {
  const auto d = m::stt_dynamics({0.0, 0.0, 0.0}, 1.3, 0.0, nominal());
  EXPECT_EQ(d, (m::State{0.0, 0.0, 0.0}));
}

TEST(SttDynamics, RollAccelerationFromDeflection) {
  const auto p = nominal();
  const auto d = m::stt_dynamics({0.0, 0.0, 0.01}, 0.01, 200.0, 2.12, p);
  // 0.7361 * 200^2 * 0.42 * 0.68 * 2.12 / (2 * 100) * 0.01
  const double expected = 0.7361 * 40000.0 * 0.42 * 0.68 * 2.12 / 200.0 * 0.01;
  EXPECT_NEAR(d[1], expected, 1e-12);
  EXPECT_NEAR(d[1], 0.8913, 1e-4);
  EXPECT_NEAR(d[2], 0.0, 1e-15);
}

TEST(SttDynamics, ActuatorLag) {
  const auto d = m::stt_dynamics({0.0, 0.0, 1.0}, 0.0, 200.0, 2.12, nominal());
  EXPECT_DOUBLE_EQ(d[2], -100.0);
  EXPECT_DOUBLE_EQ(d[0], 0.0);
}

TEST(SttDynamics, TimeVaryingFlightCondition) {
  const auto p = nominal();
  const double t = 0.8;
  const double V = 200.0 * (1.0 + 0.1 * std::cos(2.0 * t));
  const double slope = 2.12 * (1.0 + 0.2 * std::sin(t));
  const auto d = m::stt_dynamics({0.1, -0.2, 0.03}, t, 0.05, p);
  EXPECT_NEAR(d[0], -0.2, 1e-15);
  EXPECT_NEAR(d[1], 0.7361 * V * V * 0.42 * 0.68 * slope / 200.0 * 0.03, 1e-12);
  EXPECT_NEAR(d[2], (0.05 - 0.03) / 0.01, 1e-12);
}

TEST(MissileControl, EquilibriumAtRest) {
  const m::MissileDesign d;
  for (double k : {0.1, 1.0, 5.0}) {
    const auto c = m::missile_control({0.0, 0.0, 0.0}, k, 2.0 * k, d);
    EXPECT_EQ(c.z1, 0.0);
    EXPECT_EQ(c.z2, 0.0);
    EXPECT_EQ(c.z3, 0.0);
    EXPECT_EQ(c.command, 0.0);
    EXPECT_EQ(c.k2_rate, 0.0);
    EXPECT_EQ(c.k3_rate, 0.0);
  }
}

TEST(MissileControl, Psi3AtDesignValues) {
  const m::MissileDesign d;
  const auto c = m::missile_control({0.0, 0.0, 0.0}, 0.1, 0.1, d);
  // 0.05 + 0 + 0.0025 + 0.025 + 0.05 * 25 / sqrt(0.1) + 0.25 + 2
  const double expected = 0.05 + 0.0025 + 0.025 + 0.05 * 25.0 / std::sqrt(0.1) + 0.25 + 2.0;
  EXPECT_NEAR(c.psi3, expected, 1e-12);
  EXPECT_NEAR(c.psi3, 6.28035, 1e-4);
}

TEST(MissileControl, ErrorCoordinatesAndCommand) {
  const m::MissileDesign d;
  const m::State s{0.1, -0.3, 0.02};
  const double k2 = 0.4, k3 = 0.7;
  const auto c = m::missile_control(s, k2, k3, d);
  const double z2 = -0.3 + 5.0 * 0.1;
  const double z3 = 0.02 + 0.5 * k2 * z2;
  EXPECT_NEAR(c.z2, z2, 1e-15);
  EXPECT_NEAR(c.z3, z3, 1e-15);
  const double k2dot = 0.1 * z2 * z2;
  EXPECT_NEAR(c.k2_rate, k2dot, 1e-15);
  const double mk2 = 0.5 * k2;
  const double psi3 = mk2 + 0.5 * k2dot + mk2 * mk2 + 0.5 * mk2 + mk2 * 25.0 / std::sqrt(0.1) + mk2 * 5.0 + 2.0;
  EXPECT_NEAR(c.psi3, psi3, 1e-12);
  EXPECT_NEAR(c.k3_rate, 0.1 * psi3 * psi3 * z3 * z3, 1e-12);
  EXPECT_NEAR(c.command, -0.5 * k3 * psi3 * psi3 * z3, 1e-12);
}

TEST(MissileControl, GainRatesNonnegative) {
  const m::MissileDesign d;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> s(-2.0, 2.0), k(0.01, 10.0);
  for (int i = 0; i < 10000; ++i) {
    const auto c = m::missile_control({s(rng), s(rng), s(rng)}, k(rng), k(rng), d);
    ASSERT_GE(c.k2_rate, 0.0);
    ASSERT_GE(c.k3_rate, 0.0);
  }
}

TEST(MissileDesign, Validation) {
  m::MissileDesign d;
  EXPECT_NO_THROW(d.validate());
  d.k1 = 0.05;  // k1 - 3 eps / 4 < 0
  EXPECT_THROW(d.validate(), pfac::ConfigError);
  m::MissileParams p = nominal();
  p.tau_a = -0.01;
  EXPECT_THROW(p.validate(), pfac::ConfigError);
}

TEST(GenericForm, MatchesSpecialisedDynamics) {
  const auto p = nominal();
  const m::MissileDesign d;
  const auto g = m::generic_form(p, d);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> s(-1.0, 1.0), t(0.0, 20.0);
  for (int i = 0; i < 200; ++i) {
    const m::State x{s(rng), s(rng), s(rng)};
    const double u = s(rng);
    const double tt = t(rng);
    const auto theta = p.flight.eval(tt);
    std::vector<double> dx(3);
    g.plant.rhs(x, u, theta, dx);
    const auto ref = m::stt_dynamics(x, tt, u, p);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(dx[j], ref[j], 1e-12 * std::max(1.0, std::abs(ref[j])));
  }
}

TEST(GenericForm, AssumptionsHoldOverFlightBox) {
  const auto p = nominal();
  const auto g = m::generic_form(p, m::MissileDesign{});
  const auto rep = pfac::assumption_probe(
      g.plant, g.bounds, g.oracle,
      [&p](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> s(-1.0, 1.0), t(0.0, 50.0);
        pfac::ProbeSample smp;
        smp.x = {s(rng), s(rng), s(rng)};
        smp.u = s(rng);
        smp.theta = p.flight.eval(t(rng));
        return smp;
      },
      10000, 4);
  EXPECT_TRUE(rep.ok());
}
