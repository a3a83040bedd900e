#include <random>

#include <benchmark/benchmark.h>

#include "mvs/mpc.hpp"
#include "mvs/qp.hpp"

namespace {

using namespace mvs;

// Condensed MPC2 problem at horizon N around a fixed feature state.
QpProblem mpc_problem(int horizon) {
  MpcConfig cfg;
  cfg.horizon = horizon;
  cfg.flags = {true, true, true};
  const InteractionMatrix L = interaction_matrix({0.3, -0.1, 1.2, 0.2}, 1.0);
  const DiscreteModel m = discretize(L, cfg.sample_period);
  return condense(Vec4(0.3, -0.1, 0.2, 0.35), build_prediction(m.A, m.B, horizon), cfg);
}

void BM_SolveQp(benchmark::State& state) {
  const QpProblem qp = mpc_problem(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_qp(qp));
  state.counters["vars"] = static_cast<double>(qp.H.rows());
  state.counters["rows"] = static_cast<double>(qp.G.rows());
}
BENCHMARK(BM_SolveQp)->Arg(5)->Arg(10)->Arg(20)->Unit(benchmark::kMicrosecond);

void BM_MpcStep(benchmark::State& state) {
  MpcConfig cfg;
  cfg.horizon = static_cast<int>(state.range(0));
  cfg.flags = {state.range(1) > 0, state.range(1) > 1, state.range(1) > 1};
  const InteractionMatrix L = interaction_matrix({0.3, -0.1, 1.2, 0.2}, 1.0);
  const Vec4 e(0.3, -0.1, 0.2, 0.35);
  for (auto _ : state) benchmark::DoNotOptimize(mpc_step(e, L, cfg));
}
// Second argument: 0 unconstrained, 1 input bounds, 2 input + state + terminal.
BENCHMARK(BM_MpcStep)->ArgsProduct({{10, 20}, {0, 1, 2}})->Unit(benchmark::kMicrosecond);

}  // namespace
