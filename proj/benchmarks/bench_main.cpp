#include <vector>

#include <benchmark/benchmark.h>

#include <pfac/autodiff.hpp>
#include <pfac/scenario.hpp>
#include <pfac/simkit.hpp>

namespace {

void vdp(double, std::span<const double> y, std::span<double> dy) {
  dy[0] = y[1];
  dy[1] = (1.0 - y[0] * y[0]) * y[1] - y[0];
}

void BM_Rk4Step(benchmark::State& state) {
  pfac::sim::Rk4 rk(2);
  std::vector<double> y{2.0, 0.0};
  double t = 0.0;
  for (auto _ : state) {
    rk.step(vdp, y, t, 1e-3);
    t += 1e-3;
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_Rk4Step);

void BM_Gradient(benchmark::State& state) {
  using D = pfac::ad::Dual<double>;
  const std::vector<double> p{0.3, -1.2, 0.7, 2.0};
  for (auto _ : state) {
    auto g = pfac::ad::gradient(
        [](std::span<const D> x) { return sin(x[0]) * x[1] + x[2] * x[3] * x[3] + exp(x[0] * x[2]); }, p);
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_Gradient);

void BM_ControllerEvaluate(benchmark::State& state) {
  auto cfg = pfac::default_config("numeric-2d");
  cfg.mode = state.range(0) == 0 ? pfac::PsiMode::Paper : pfac::PsiMode::Auto;
  const auto sc = pfac::build_scenario(cfg);
  const std::vector<double> x{-0.4, 1.1}, k{0.5, 0.8};
  for (auto _ : state) {
    auto snap = sc.controller->evaluate(x, k);
    benchmark::DoNotOptimize(snap);
  }
  state.SetLabel(state.range(0) == 0 ? "paper" : "auto");
}
BENCHMARK(BM_ControllerEvaluate)->Arg(0)->Arg(1);

void BM_ClosedLoopSecond(benchmark::State& state) {
  auto cfg = pfac::default_config("numeric-2d");
  cfg.horizon = 1.0;
  const auto sc = pfac::build_scenario(cfg);
  for (auto _ : state) {
    auto traj = pfac::simulate(sc);
    benchmark::DoNotOptimize(traj.samples.data());
  }
}
BENCHMARK(BM_ClosedLoopSecond)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
