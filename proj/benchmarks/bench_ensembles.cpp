#include <vector>

#include <benchmark/benchmark.h>

#include "rdfluct/crdme.hpp"
#include "rdfluct/ensemble.hpp"
#include "rdfluct/fluctuation.hpp"

namespace {

using namespace rdfluct;

// SSA throughput on the reference system; the counter reports events per second.
void BM_CrdmeEvents(benchmark::State& state) {
  ReactionSystem sys;
  sys.gamma = static_cast<double>(state.range(0));
  const CrdmeModel model(sys, 256);
  RandomStream init_rng(3, 0);
  const auto fields = initial_concentrations(PeriodicGrid{256});
  CrdmeSimulator sim(model, init_particles(model, fields, init_rng));
  RandomStream rng(3, 1);
  std::int64_t events = 0;
  for (auto _ : state) {
    for (int k = 0; k < 1000; ++k) benchmark::DoNotOptimize(sim.step(rng));
    events += 1000;
  }
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_CrdmeEvents)->Arg(500)->Arg(2000);

void BM_CovarianceAssembly(benchmark::State& state) {
  const MeanFieldSolver solver(ReactionSystem{}, static_cast<std::size_t>(state.range(0)));
  const FluctuationModel model(solver, 30);
  const auto mf = solver.initial_state();
  for (auto _ : state) benchmark::DoNotOptimize(model.assemble_covariance(mf));
}
BENCHMARK(BM_CovarianceAssembly)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_DriftOperator(benchmark::State& state) {
  const MeanFieldSolver solver(ReactionSystem{}, 128);
  const FluctuationModel model(solver, 30);
  const auto mf = solver.initial_state();
  for (auto _ : state) benchmark::DoNotOptimize(model.drift_operator(mf));
}
BENCHMARK(BM_DriftOperator)->Unit(benchmark::kMillisecond);

// One block of SPIDE trials over 0.1 time units.
void BM_SpideEnsembleBlock(benchmark::State& state) {
  const MeanFieldSolver solver(ReactionSystem{}, 128);
  const FluctuationModel model(solver, 30);
  const auto path = mean_field_path(solver, solver.initial_state(), 0.1, 1e-3);
  const std::vector<double> save{0.1};
  const auto trials = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_fluctuation_ensemble(model, path, 1e-3, save, trials, 4));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SpideEnsembleBlock)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
