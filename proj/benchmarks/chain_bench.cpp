#include <benchmark/benchmark.h>

#include "collapse_lab/engine.hpp"

namespace {

using namespace collapse_lab;

ChainConfig variance_chain(SamplingMode mode) {
  return ChainConfig{FamilySpec::gaussian_variance(0.0), EstimatorSpec::variance_known_mean(0.0),
                     ScheduleSpec::constant(), 100, 100, ParamPoint{1.0}, 7, mode};
}

void BM_RunChain(benchmark::State& state) {
  const auto config = variance_chain(state.range(0) != 0 ? SamplingMode::kSufficientStatistic : SamplingMode::kDatasets);
  std::uint64_t i = 0;
  for (auto _ : state) {
    RandomStream rng = RandomStream::substream(config.seed, i++);
    benchmark::DoNotOptimize(run_chain(config, rng));
  }
}
BENCHMARK(BM_RunChain)->ArgName("sufficient")->Arg(0)->Arg(1);

void BM_MonteCarlo(benchmark::State& state) {
  const auto config = variance_chain(SamplingMode::kDatasets);
  MonteCarloOptions options;
  options.replications = 1000;
  options.parallelism = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_monte_carlo(config, options));
  state.SetItemsProcessed(state.iterations() * 1000 * 100 * 100);
}
BENCHMARK(BM_MonteCarlo)->ArgName("workers")->Arg(1)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

}  // namespace
