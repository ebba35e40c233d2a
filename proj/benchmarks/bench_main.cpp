#include <benchmark/benchmark.h>

#include <cmath>

#include "stochlab/classifier.hpp"
#include "stochlab/clock.hpp"
#include "stochlab/elliptic.hpp"
#include "stochlab/parabolic.hpp"

using namespace stochlab;

namespace {

SolverConfig direct() {
  SolverConfig c;
  c.lifting = {};
  c.parallel = false;
  return c;
}

void BM_Classify(benchmark::State& state) {
  const auto m = ModelManifold::power_exp(3, 4.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(classify(m));
}
BENCHMARK(BM_Classify)->Unit(benchmark::kMillisecond);

void BM_ClockF(benchmark::State& state) {
  ClockSpec spec{Nonlinearity::saturating(), 1.0, 0.1, std::nullopt};
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(clock_f(spec, t));
    t = t < 5.0 ? t + 0.01 : 0.0;
  }
}
BENCHMARK(BM_ClockF);

// one Dirichlet solve of fast diffusion; the argument is the cell count
void BM_SolveDirichlet(benchmark::State& state) {
  const auto m = ModelManifold::power_exp(3, 4.0, 1.0);
  const auto n = Nonlinearity::power(0.5);
  const auto grid = make_grid(m, 8.0, static_cast<int>(state.range(0)));
  const auto u0 = [](double r) { return std::exp(-r * r); };
  const auto g = [](double) { return 0.0; };
  for (auto _ : state) benchmark::DoNotOptimize(solve_dirichlet(m, n, grid, u0, g, 1.0, direct()));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveDirichlet)->RangeMultiplier(2)->Range(64, 1024)->Unit(benchmark::kMillisecond)->Complexity();

void BM_WitnessExhaustion(benchmark::State& state) {
  const auto m = ModelManifold::power_exp(3, 4.0, 1.0);
  const auto n = Nonlinearity::power(0.5);
  ClockSpec clock{n, 1.0, 0.1, 1.0};
  const double S = time_to_exceed(clock).time;
  for (auto _ : state) {
    benchmark::DoNotOptimize(witness_solution(m, n, [](double) { return 0.0; }, S, clock, direct()));
  }
}
BENCHMARK(BM_WitnessExhaustion)->Unit(benchmark::kMillisecond);

void BM_SolveSemilinear(benchmark::State& state) {
  const auto m = ModelManifold::power_exp(3, 4.0, 1.0);
  const auto n = Nonlinearity::power(0.5);
  const auto grid = make_grid(m, 16.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_semilinear(m, n, grid, 1.0));
}
BENCHMARK(BM_SolveSemilinear)->RangeMultiplier(4)->Range(64, 4096)->Unit(benchmark::kMicrosecond);

void BM_LinearShooting(benchmark::State& state) {
  const auto m = ModelManifold::power_exp(3, 4.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(linear_shooting(m, 1.0));
}
BENCHMARK(BM_LinearShooting)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
