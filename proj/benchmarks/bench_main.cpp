#include <benchmark/benchmark.h>

#include <cmath>

#include "volterra/adjoint.hpp"
#include "volterra/forward.hpp"
#include "volterra/kernels.hpp"
#include "volterra/regression.hpp"

using namespace volterra;

static void BM_NeumannPsi(benchmark::State& state) {
  const TimeGrid g(1.0, static_cast<std::size_t>(state.range(0)));
  const TwoTimeKernel b = TwoTimeKernel::exp_decay(1.0, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(neumann_psi(b, g, 1e-10));
}
BENCHMARK(BM_NeumannPsi)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_Simulate(benchmark::State& state) {
  const TimeGrid g(1.0, static_cast<std::size_t>(state.range(0)));
  const BrownianEnsemble w = sample_brownian(g, 2000, 1);
  SvieSpec spec;
  spec.drift.state = TwoTimeKernel::exp_decay(0.3, 1.0);
  spec.diffusion.state = TwoTimeKernel::constant(0.2);
  const RegularControl u = RegularControl::constant(g, {}, 0.0);
  const SingularControl xi = SingularControl::zero(g);
  for (auto _ : state) benchmark::DoNotOptimize(simulate(spec, u, xi, w));
  state.SetItemsProcessed(state.iterations() * 2000);
}
BENCHMARK(BM_Simulate)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_RegressionAdjoint(benchmark::State& state) {
  const TimeGrid g(1.0, 32);
  const BrownianEnsemble w = sample_brownian(g, static_cast<std::size_t>(state.range(0)), 2);
  BsvieSpec s;
  s.b0 = TwoTimeKernel::exp_decay(0.3, 1.0);
  s.sigma0 = TimeFunction::constant(0.2);
  s.theta = {1.0, 0.3, 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(solve_regression(s, nullptr, w));
}
BENCHMARK(BM_RegressionAdjoint)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_LeastSquares(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 1), m, 3);
  std::vector<std::vector<double>> cols(2, std::vector<double>(m));
  std::vector<double> y(m);
  for (std::size_t k = 0; k < m; ++k) {
    cols[0][k] = w.terminal(k);
    cols[1][k] = std::exp(0.5 * w.terminal(k));
    y[k] = cols[0][k] * cols[1][k] + 0.1 * cols[0][k];
  }
  RegressionOptions o;
  o.degree = 3;
  for (auto _ : state) benchmark::DoNotOptimize(fit_least_squares(cols, y, {}, o));
}
BENCHMARK(BM_LeastSquares)->Arg(1000)->Arg(100000);
BENCHMARK_MAIN();
