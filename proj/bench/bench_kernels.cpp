// Serial reference vs OpenMP kernels.
#include <benchmark/benchmark.h>

#include <omp.h>

#include "mdl/exact_walk.hpp"
#include "mdl/mc_harness.hpp"

namespace {

const mdl::LatticeSpec kSpec(1.0 / 20.0);

void BM_SimulateSerial(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(mdl::simulate_serial(mdl::rules::Gap{1.0}, kSpec, state.range(0), 1));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SimulateParallel(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(mdl::simulate(mdl::rules::Gap{1.0}, kSpec, state.range(0), 1));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = omp_get_max_threads();
}

mdl::WalkDP dp_spec(std::int64_t cap) {
  mdl::WalkDP w;
  w.c = 1.0;
  w.h = 1.0 / 40.0;
  w.cap = cap;
  return w;
}

void BM_DpSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(mdl::dp_solve_serial(dp_spec(state.range(0))));
}

void BM_DpParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(mdl::dp_solve(dp_spec(state.range(0))));
  state.counters["threads"] = omp_get_max_threads();
}

}  // namespace

BENCHMARK(BM_SimulateSerial)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateParallel)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DpSerial)->Arg(120)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DpParallel)->Arg(120)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
