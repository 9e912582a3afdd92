// Serial reference kernels against their OpenMP counterparts. Thread count for
// the parallel runs comes from CYCLO_LMS_THREADS (default: all cores).

#include <benchmark/benchmark.h>

#include <memory>

#include "cyclolms/lms_sim.hpp"
#include "cyclolms/moment_estimation.hpp"
#include "cyclolms/scenarios.hpp"

namespace {

using namespace cyclolms;

const Scenario& example2_scenario() {
  static const Scenario s = example2();
  return s;
}

void BM_MonteCarloParallel(benchmark::State& state) {
  const Scenario& s = example2_scenario();
  const auto trials = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(monte_carlo_mse(*s.source, 0.01, 500, trials, 3));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(trials) * 500);
}

void BM_MonteCarloSerial(benchmark::State& state) {
  const Scenario& s = example2_scenario();
  const auto trials = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::monte_carlo_mse(*s.source, 0.01, 500, trials, 3));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(trials) * 500);
}

std::shared_ptr<const PhaseSampler> example2_sampler() {
  const Scenario& s = example2_scenario();
  return std::make_shared<const ModelSampler>(s.input, s.period, s.gt);
}

void BM_MomentsParallel(benchmark::State& state) {
  const auto sampler = example2_sampler();
  MomentEstimationOptions opt;
  opt.min_draws = 0;
  const auto draws = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_moments(sampler, draws, 9, opt));
}

void BM_MomentsSerial(benchmark::State& state) {
  const auto sampler = example2_sampler();
  MomentEstimationOptions opt;
  opt.min_draws = 0;
  const auto draws = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(reference::estimate_moments(sampler, draws, 9, opt));
}

BENCHMARK(BM_MonteCarloParallel)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonteCarloSerial)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MomentsParallel)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MomentsSerial)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
