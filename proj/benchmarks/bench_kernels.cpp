#include <vector>

#include <benchmark/benchmark.h>

#include "rdfluct/meanfield.hpp"
#include "rdfluct/rate_hierarchy.hpp"
#include "rdfluct/rng.hpp"

namespace {

using namespace rdfluct;

void BM_RateTreeUpdate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RateHierarchy tree(n);
  RandomStream rng(1, 0);
  std::vector<double> rates(n);
  for (auto& r : rates) r = rng.uniform();
  tree.assign(rates);
  std::size_t i = 0;
  for (auto _ : state) {
    tree.update(i, rates[i] + 0.5);
    i = (i + 7919) % n;
  }
  benchmark::DoNotOptimize(tree.total());
}
BENCHMARK(BM_RateTreeUpdate)->RangeMultiplier(4)->Range(256, 16384);

void BM_RateTreeSelect(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RateHierarchy tree(n);
  RandomStream rng(2, 0);
  std::vector<double> rates(n);
  for (auto& r : rates) r = rng.uniform();
  tree.assign(rates);
  for (auto _ : state) benchmark::DoNotOptimize(tree.select(rng.uniform_open_closed()));
}
BENCHMARK(BM_RateTreeSelect)->RangeMultiplier(4)->Range(256, 16384);

void BM_Convolution(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const KernelConvolution conv(KernelTable(1.0 / 128.0, PeriodicGrid{n}));
  std::vector<double> f(n, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(conv.apply(f));
}
BENCHMARK(BM_Convolution)->RangeMultiplier(2)->Range(128, 1024);

void BM_MeanFieldStep(benchmark::State& state) {
  const MeanFieldSolver solver(ReactionSystem{}, static_cast<std::size_t>(state.range(0)));
  auto s = solver.initial_state();
  for (auto _ : state) {
    s = solver.step(s, 1e-3);
    benchmark::DoNotOptimize(s.time);
  }
}
BENCHMARK(BM_MeanFieldStep)->Arg(128)->Arg(512);

}  // namespace
