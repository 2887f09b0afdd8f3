#include <benchmark/benchmark.h>

#include <vector>

#include "dhl/cascade.hpp"
#include "dhl/correlation.hpp"
#include "dhl/gmc.hpp"

using namespace dhl;

static void BM_EvolvePopulation(benchmark::State& state) {
  MassPopulation pop;
  pop.provenance.b = 2;
  pop.masses.assign(static_cast<std::size_t>(state.range(0)), 1.0);
  std::uint64_t step = 0;
  for (auto _ : state) {
    auto next = evolve_population(pop, 1, step++, {1, 64, true});
    benchmark::DoNotOptimize(next.masses.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EvolvePopulation)->Arg(1 << 16)->Arg(1 << 20)->Unit(benchmark::kMillisecond);

static void BM_PairCountHistogram(benchmark::State& state) {
  const LatticeParams params(2, 2);
  for (auto _ : state) {
    auto h = pair_count_histogram(params, static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(h.counts.data());
  }
}
BENCHMARK(BM_PairCountHistogram)->DenseRange(4, 10, 2)->Unit(benchmark::kMillisecond);

static void BM_SampleGmcTotal(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const VarianceProfile profile(2);
  const auto built = build_kernel(profile, 0.0, 1.0, n, enumerate_paths(LatticeParams(2, 2), n));
  const std::vector<double> reference(built.gram.rows(), 1.0 / static_cast<double>(built.gram.rows()));
  auto rng = rng::Stream::derive(3, rng::Domain::kTest, 0);
  std::vector<double> scratch;
  for (auto _ : state) benchmark::DoNotOptimize(sample_gmc_total(reference, built.gram, rng, scratch));
}
BENCHMARK(BM_SampleGmcTotal)->DenseRange(1, 3);
BENCHMARK_MAIN();
