#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "reachlab/estimators.hpp"
#include "reachlab/experiments.hpp"
#include "reachlab/metrics.hpp"
#include "reachlab/oracle.hpp"
#include "reachlab/rng.hpp"

using namespace reachlab;

namespace {

MarkovModel default_chain() {
  ChainSpec spec;
  spec.target_probability = 0.5;
  return random_chain(spec);
}

void BM_PhiloxBlock(benchmark::State& state) {
  Philox4x64 g(1, 2);
  for (auto _ : state) benchmark::DoNotOptimize(g());
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PhiloxBlock);

void BM_SampleTrajectory(benchmark::State& state) {
  const auto chain = default_chain();
  const RandomSource src(3);
  const auto mode = state.range(0) ? SamplingMode::outcome_excluded : SamplingMode::standard;
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_trajectory(chain, mode, src, i++));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SampleTrajectory)->Arg(0)->Arg(1);

void BM_Estimate(benchmark::State& state) {
  const auto chain = default_chain();
  const auto kind = static_cast<EstimatorKind>(state.range(0));
  const RandomSource src(4);
  for (auto _ : state) benchmark::DoNotOptimize(estimate(chain, kind, 1000, src));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_Estimate)->Arg(0)->Arg(1)->Arg(2);

void BM_ExactMoments(benchmark::State& state) {
  ChainSpec spec;
  spec.n_states = static_cast<std::size_t>(state.range(0));
  spec.target_probability = 0.5;
  const auto chain = random_chain(spec);
  for (auto _ : state) benchmark::DoNotOptimize(exact_moments(chain));
}
BENCHMARK(BM_ExactMoments)->Arg(11)->Arg(51);

void BM_Auroc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u;
  std::vector<double> scores(n);
  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = u(gen);
    labels[i] = u(gen) < 0.3 ? 1 : 0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(auroc(scores, labels));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Auroc)->Arg(2000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
