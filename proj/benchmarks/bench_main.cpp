#include <benchmark/benchmark.h>

#include "cspphase/bethe.hpp"
#include "cspphase/cycles.hpp"
#include "cspphase/graphs.hpp"
#include "cspphase/oracle.hpp"
#include "cspphase/reconstruction.hpp"
#include "cspphase/spectral.hpp"

using namespace cspphase;

static void BM_PartitionFunction(benchmark::State& state) {
  const auto m = make_hypergraph_coloring(2, 3);
  const int n = static_cast<int>(state.range(0));
  Rng rng(1);
  const auto g = sample_null(n, n / 2, m, true, rng);
  for (auto _ : state) benchmark::DoNotOptimize(partition_function(g, m));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ipow(3, n)));
}
BENCHMARK(BM_PartitionFunction)->Arg(8)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);

static void BM_SpectralReport(benchmark::State& state) {
  const auto m = make_hypergraph_coloring(3, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(spectral_report(m).d_ks);
}
BENCHMARK(BM_SpectralReport)->Arg(3)->Arg(5)->Arg(7);

static void BM_PopulationSweep(benchmark::State& state) {
  const auto m = make_naesat(3);
  PopulationOptions o;
  o.size = static_cast<std::size_t>(state.range(0));
  o.sweeps = 1;
  o.init = InitKind::kRandom;
  for (auto _ : state) benchmark::DoNotOptimize(population_dynamics(4.0, m, o).size());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PopulationSweep)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_BetheGap(benchmark::State& state) {
  const auto m = make_hypergraph_coloring(2, 3);
  PopulationOptions o;
  o.size = 10000;
  o.sweeps = 20;
  const auto pi = population_dynamics(5.0, m, o);
  BetheOptions b;
  b.samples = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(bethe_gap(5.0, m, pi, b).value);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BetheGap)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_CycleCount(benchmark::State& state) {
  const auto m = make_hypergraph_coloring(2, 3);
  Rng rng(2);
  const auto g = sample_null(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)), m, false, rng);
  auto ys = enumerate_signatures(m, 1);
  for (const auto& y : enumerate_signatures(m, 2)) ys.push_back(y);
  for (const auto& y : enumerate_signatures(m, 3)) ys.push_back(y);
  for (auto _ : state) benchmark::DoNotOptimize(count_cycles(g, ys));
}
BENCHMARK(BM_CycleCount)->Arg(3000)->Arg(30000)->Unit(benchmark::kMillisecond);

static void BM_CorrStar(benchmark::State& state) {
  const auto m = make_hypergraph_coloring(2, 3);
  for (auto _ : state) benchmark::DoNotOptimize(corr_star(3.0, m, static_cast<int>(state.range(0)), {100, 1, 1}).value);
}
BENCHMARK(BM_CorrStar)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
