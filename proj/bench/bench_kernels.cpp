#include <benchmark/benchmark.h>

#include <memory>

#include "qsa/dynamics.hpp"
#include "qsa/oracle.hpp"
#include "qsa/protocol.hpp"
#include "qsa/scenario.hpp"
#include "qsa/superarrival.hpp"
#include "qsa/trajectories.hpp"
#include "qsa/wavepacket.hpp"

namespace {

qsa::PhysicalParams params() { return {1.0, 1.0, -1000.0, 2.0, 5.0, 0.0}; }

void BM_EvolveBarrier(benchmark::State& state) {
  for (auto _ : state) {
    auto sol = qsa::evolve_barrier(params(), {1.0 / 500, 1.0 / 500, 500.0}, 1000.0);
    benchmark::DoNotOptimize(sol.steps());
  }
}
BENCHMARK(BM_EvolveBarrier);

void transmission_bench(benchmark::State& state, qsa::Exec exec) {
  auto sol = std::make_shared<const qsa::TrajectorySolution>(
      qsa::evolve_barrier(params(), {1.0 / 500, 1.0 / 500, 500.0}, 1000.0));
  const auto grid = qsa::linspace(0.0, 1000.0, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto curve = qsa::transmission_curve(sol, {500.0}, grid, exec);
    benchmark::DoNotOptimize(curve.values().data());
  }
}
void BM_TransmissionSerial(benchmark::State& s) { transmission_bench(s, qsa::Exec::serial); }
void BM_TransmissionParallel(benchmark::State& s) { transmission_bench(s, qsa::Exec::parallel); }
BENCHMARK(BM_TransmissionSerial)->Arg(10001)->Arg(100001);
BENCHMARK(BM_TransmissionParallel)->Arg(10001)->Arg(100001);

// Ten Crank-Nicolson steps on the fig2-sized grid.
void oracle_bench(benchmark::State& state, qsa::Exec exec) {
  qsa::OracleOptions opt;
  opt.exec = exec;
  const qsa::Grid grid{-4500.0, 2500.0, static_cast<std::size_t>(state.range(0))};
  const auto s0 = qsa::init_gaussian(grid, params(), opt);
  const auto pot = qsa::PotentialSpec::from(params(), {1.0 / 500, 1.0 / 500, 500.0});
  for (auto _ : state) {
    auto ev = qsa::evolve_grid(s0, pot, 0.5, 0.05, opt);
    benchmark::DoNotOptimize(ev.states.back().values.data());
  }
  state.SetItemsProcessed(state.iterations() * 10 * state.range(0));
}
void BM_OracleStepsSerial(benchmark::State& s) { oracle_bench(s, qsa::Exec::serial); }
void BM_OracleStepsParallel(benchmark::State& s) { oracle_bench(s, qsa::Exec::parallel); }
BENCHMARK(BM_OracleStepsSerial)->Arg(1 << 14);
BENCHMARK(BM_OracleStepsParallel)->Arg(1 << 14);

void ensemble_bench(benchmark::State& state, qsa::Exec exec) {
  qsa::EnsembleConfig cfg{static_cast<std::size_t>(state.range(0)), 1, qsa::linspace(0.0, 1000.0, 501)};
  for (auto _ : state) {
    auto ens = qsa::integrate_ensemble(params(), {1.0 / 500, 1.0 / 500, 500.0}, cfg, exec);
    benchmark::DoNotOptimize(ens.data());
  }
}
void BM_EnsembleSerial(benchmark::State& s) { ensemble_bench(s, qsa::Exec::serial); }
void BM_EnsembleParallel(benchmark::State& s) { ensemble_bench(s, qsa::Exec::parallel); }
BENCHMARK(BM_EnsembleSerial)->Arg(200);
BENCHMARK(BM_EnsembleParallel)->Arg(200);

void sweep_bench(benchmark::State& state, qsa::Exec exec) {
  const auto sc = qsa::preset_fig2();
  for (auto _ : state) {
    auto table = qsa::sweep_k(sc, sc.k_list, exec);
    benchmark::DoNotOptimize(table.entries.data());
  }
}
void BM_SweepSerial(benchmark::State& s) { sweep_bench(s, qsa::Exec::serial); }
void BM_SweepParallel(benchmark::State& s) { sweep_bench(s, qsa::Exec::parallel); }
BENCHMARK(BM_SweepSerial);
BENCHMARK(BM_SweepParallel);

void BM_SimulateDetection(benchmark::State& state) {
  auto sol = std::make_shared<const qsa::TrajectorySolution>(
      qsa::evolve_barrier(params(), {1.0 / 500, 1.0 / 500, 500.0}, 1000.0));
  const auto grid = qsa::linspace(0.0, 1000.0, 10001);
  const auto curve = qsa::transmission_curve(sol, {500.0}, grid);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto counts = qsa::simulate_detection(curve, grid, static_cast<std::size_t>(state.range(0)), ++seed);
    benchmark::DoNotOptimize(counts.data());
  }
}
BENCHMARK(BM_SimulateDetection)->Arg(100000)->Arg(10000000);

}  // namespace

BENCHMARK_MAIN();
