#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include <pfac/autodiff.hpp>

namespace ad = pfac::ad;
using D = ad::Dual<double>;

namespace {

template <class F>
double central_difference(F f, std::vector<double> x, std::size_t i, double h = 1e-6) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double fp = f(x);
  x[i] = x0 - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

}  // namespace

TEST(Gradient, SquareAtThree) {
  const auto r = ad::gradient([](std::span<const D> x) { return x[0] * x[0]; }, std::vector{3.0});
  EXPECT_EQ(r.value, 9.0);
  ASSERT_EQ(r.partials.size(), 1u);
  EXPECT_EQ(r.partials[0], 6.0);
}

TEST(Gradient, ConstantHasZeroPartials) {
  const auto r = ad::gradient([](std::span<const D>) { return D(4.5); }, std::vector{0.3, -1.2});
  EXPECT_EQ(r.value, 4.5);
  EXPECT_EQ(r.partials, (std::vector<double>{0.0, 0.0}));
}

TEST(Gradient, ConstantLiftedThroughNesting) {
  using D2 = ad::Dual<D>;
  const D2 c(2.5);
  EXPECT_EQ(c.partial(0).value(), 0.0);
  EXPECT_EQ(c.value().partial(3), 0.0);
  const D2 x = D2::variable(D::variable(1.0, 0, 1), 0, 1);
  const D2 y = x * c;
  EXPECT_EQ(y.partial(0).value(), 2.5);
  EXPECT_EQ(y.partial(0).partial(0), 0.0);
}

TEST(Gradient, SinProductMatchesFiniteDifferences) {
  auto f_dual = [](std::span<const D> x) { return sin(x[0]) * x[1] + x[1] * x[1] * x[1]; };
  auto f = [](const std::vector<double>& x) { return std::sin(x[0]) * x[1] + x[1] * x[1] * x[1]; };
  const std::vector<double> p{0.7, 1.3};
  const auto r = ad::gradient(f_dual, p);
  for (std::size_t i = 0; i < 2; ++i) {
    const double fd = central_difference(f, p, i);
    EXPECT_LE(std::abs(r.partials[i] - fd), 1e-6 * std::abs(fd)) << "partial " << i;
  }
}

TEST(Gradient, ProductAndChainRules) {
  // d/dx [exp(x) cos(y)], d/dy [...] analytic.
  const auto r = ad::gradient([](std::span<const D> x) { return exp(x[0]) * cos(x[1]); }, std::vector{0.4, 2.0});
  EXPECT_NEAR(r.partials[0], std::exp(0.4) * std::cos(2.0), 1e-15);
  EXPECT_NEAR(r.partials[1], -std::exp(0.4) * std::sin(2.0), 1e-15);
}

TEST(SmoothAbs, Examples) {
  EXPECT_DOUBLE_EQ(ad::smooth_abs(0.0, 0.01), 0.01);
  EXPECT_NEAR(ad::smooth_abs(3.0, 1e-6), 3.0, 1e-12);
}

TEST(SmoothAbs, SandwichOnRandomSamples) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  const double eps = 1e-6;
  for (int s = 0; s < 10000; ++s) {
    const double a = dist(rng);
    const double v = ad::smooth_abs(a, eps);
    ASSERT_LE(std::abs(a), v);
    ASSERT_LE(v, std::abs(a) + eps);
  }
}

TEST(SmoothAbs, DifferentiableAtZero) {
  const auto r = ad::gradient([](std::span<const D> x) { return ad::smooth_abs(x[0], 1e-3); }, std::vector{0.0});
  EXPECT_EQ(r.partials[0], 0.0);
}

TEST(SecondDerivative, Examples) {
  EXPECT_DOUBLE_EQ(ad::second_derivative([](auto x) { return x * x * x; }, 2.0), 12.0);
  EXPECT_EQ(ad::second_derivative([](auto x) { return sin(x); }, 0.0), 0.0);
  const double d2 = ad::second_derivative([](auto x) { return exp(2.0 * x); }, 0.3);
  EXPECT_LE(std::abs(d2 - 4.0 * std::exp(0.6)), 1e-10 * 4.0 * std::exp(0.6));
}

TEST(SecondDerivative, ExactOnQuinticPolynomials) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  std::uniform_real_distribution<double> point(-2.0, 2.0);
  for (int s = 0; s < 200; ++s) {
    double a[6];
    for (double& c : a) c = coef(rng);
    const double x = point(rng);
    auto poly = [&a](auto v) {
      auto r = decltype(v)(a[5]);
      for (int i = 4; i >= 0; --i) r = r * v + decltype(v)(a[i]);
      return r;
    };
    // p'' = 2 a2 + 6 a3 x + 12 a4 x^2 + 20 a5 x^3
    const double exact = 2 * a[2] + 6 * a[3] * x + 12 * a[4] * x * x + 20 * a[5] * x * x * x;
    EXPECT_NEAR(ad::second_derivative(poly, x), exact, 1e-12 * std::max(1.0, std::abs(exact)));
  }
}

TEST(Domain, SqrtNegativeThrowsOnEveryLevel) {
  EXPECT_THROW(ad::sqrt(-1.0), ad::EvaluationError);
  EXPECT_THROW(ad::sqrt(D::variable(-1.0, 0, 1)), ad::EvaluationError);
  EXPECT_THROW(ad::sqrt(D::variable(0.0, 0, 1)), ad::EvaluationError);
  EXPECT_NO_THROW(ad::sqrt(D(0.0)));
}

TEST(Domain, DivisionByZeroThrows) {
  EXPECT_THROW(D::variable(1.0, 0, 1) / D(0.0), ad::EvaluationError);
}

TEST(Dual, MismatchedPartialLengthsTreatMissingAsZero) {
  const D a(2.0, {1.0, 2.0, 3.0});
  const D b(5.0, {4.0});
  const D c = a + b;
  EXPECT_EQ(c.value(), 7.0);
  EXPECT_EQ(c.partial(0), 5.0);
  EXPECT_EQ(c.partial(2), 3.0);
  const D d = a * b;
  EXPECT_EQ(d.partial(0), 1.0 * 5.0 + 2.0 * 4.0);
  EXPECT_EQ(d.partial(1), 10.0);
}
