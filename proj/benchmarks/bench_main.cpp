#include <benchmark/benchmark.h>

#include <random>

#include "qasync/async_engine.hpp"
#include "qasync/delay_models.hpp"
#include "qasync/minibatch.hpp"
#include "qasync/optimizers.hpp"
#include "qasync/problems.hpp"

using namespace qasync;

namespace {

DelaySequence random_delays(Round T, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Delay> d(static_cast<std::size_t>(T));
  for (Round t = 1; t <= T; ++t)
    d[static_cast<std::size_t>(t - 1)] = std::uniform_int_distribution<Delay>(0, std::min<Delay>(t - 1, 64))(rng);
  return DelaySequence(std::move(d));
}

void BM_EngineVanilla(benchmark::State& state) {
  const Round T = state.range(0);
  const Problem p = make_quadratic(16, 1.0);
  const DelaySequence d = random_delays(T, 1);
  for (auto _ : state) {
    GradientOracle o(p, 1.0, 2);
    VanillaAsyncSgd sgd(Vector::Ones(16), 0.01);
    benchmark::DoNotOptimize(run(sgd, o, d).output);
  }
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_EngineVanilla)->Arg(1 << 10)->Arg(1 << 14);

void BM_ComputeStats(benchmark::State& state) {
  const DelaySequence d = random_delays(state.range(0), 3);
  for (auto _ : state) benchmark::DoNotOptimize(compute_stats(d).tau_med());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ComputeStats)->Arg(1 << 12)->Arg(1 << 16);

void BM_SimulateWorkers(benchmark::State& state) {
  WorkerSchedule s;
  s.workers = static_cast<int>(state.range(1));
  s.seed = 4;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_workers(state.range(0), s).horizon());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateWorkers)->Args({1 << 12, 4})->Args({1 << 12, 16})->Args({1 << 16, 16});

void BM_Algorithm1(benchmark::State& state) {
  const Round T = state.range(0);
  const Problem p = make_quadratic(16, 1.0);
  const Vector w1 = Vector::Unit(16, 0);
  const DelaySequence d = constant_delay(T, 8);
  MiniBatchConfig cfg;
  cfg.tau_hat_q = 8;
  auto factory = [&](int K) { return acsa_accelerated(p, w1, K, 1.0 / std::sqrt(8.0), 1.0); };
  for (auto _ : state) {
    GradientOracle o(p, 1.0, 5);
    benchmark::DoNotOptimize(run_algorithm1(factory, cfg, o, d).output);
  }
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_Algorithm1)->Arg(1 << 12)->Arg(1 << 15);

}  // namespace

BENCHMARK_MAIN();
