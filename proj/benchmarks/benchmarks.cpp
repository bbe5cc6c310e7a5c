#include <benchmark/benchmark.h>

#include "tvopt/consensus.hpp"
#include "tvopt/objectives.hpp"
#include "tvopt/optimizers.hpp"
#include "tvopt/rng.hpp"
#include "tvopt/topology.hpp"

namespace {

using namespace tvopt;

Eigen::MatrixXd random_state(int d, int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(d, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < d; ++i) x(i, j) = rng.gaussian();
  return x;
}

void BM_MetropolisWeights(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const MixingSchedule s = MixingSchedule::random_gilbert(n, 0.3, 1, 2, 5);
  const Graph g = s.graph_at(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(metropolis_weights(g));
  }
}
BENCHMARK(BM_MetropolisWeights)->Arg(10)->Arg(50)->Arg(200);

void BM_WindowDelta(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const MixingSchedule s = MixingSchedule::random_gilbert(n, 0.3, 1, 2, 5);
  const Eigen::MatrixXd wb = window_product(s, 1, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(window_delta(wb));
  }
}
BENCHMARK(BM_WindowDelta)->Arg(10)->Arg(50)->Arg(200);

void BM_GossipRound(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const MixingSchedule s = MixingSchedule::random_gilbert(n, 0.3, 1, 2, 5);
  Eigen::MatrixXd x = random_state(50, n, 17);
  std::int64_t k = 0;
  for (auto _ : state) {
    x = x * s.matrix_at(k % 64);
    ++k;
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_GossipRound)->Arg(10)->Arg(50)->Arg(200);

void BM_QuadraticStackedGradient(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto obj = quadratic_family(n, 0.1);
  const Eigen::MatrixXd x = random_state(n, n, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(obj->stacked_gradient(x));
  }
}
BENCHMARK(BM_QuadraticStackedGradient)->Arg(10)->Arg(100);

void BM_ProjGdOuterStep(benchmark::State& state) {
  const int n = 10;
  const auto obj = quadratic_family(n, 0.1);
  const SpectralConstants c = obj->spectral_constants();
  const MixingSchedule s = MixingSchedule::random_gilbert(n, 0.5, 1, 2, 7);
  const ScheduleStats stats{2, 0.8};
  const ReferenceSolution ref{Eigen::VectorXd::Zero(n), 0.0, 0.0};
  SolverConfig cfg;
  cfg.inner = InnerMode::fixed_rounds(static_cast<int>(state.range(0)));
  cfg.outer_iterations = 1;
  const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        decentralized_projected_gd(*obj, c, s, stats, x0, cfg, ref));
  }
}
BENCHMARK(BM_ProjGdOuterStep)->Arg(1)->Arg(5)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
