// Serial vs OpenMP replica loops on the default AND torus.
#include <benchmark/benchmark.h>

#include <thread>

#include "fincode/coding_engine.hpp"
#include "fincode/replicas.hpp"

using namespace fincode;

namespace {

struct Fixture {
  EngineConfig cfg;
  ProcessOracle oracle;
  ParameterChoice params;

  explicit Fixture(std::int64_t n) : cfg(make(n)), oracle(cfg.process, cfg.graph), params(choose_parameters(cfg, oracle)) {}

  static EngineConfig make(std::int64_t n) {
    EngineConfig c;
    c.graph = LatticeGraph::torus(1, n);
    c.process = ProcessSpec::and_process();
    c.eps = 1.0;
    c.m = 5;
    return c;
  }
};

Fixture& fixture(std::int64_t n) {
  static Fixture f24(24), f256(256);
  return n == 24 ? f24 : f256;
}

void run(benchmark::State& state, int jobs) {
  auto& f = fixture(state.range(0));
  const auto seeds = seed_range(1, 256);
  std::function<RunResult(std::uint64_t)> fn = [&](std::uint64_t s) { return run_torus(f.cfg, f.params, f.oracle, s); };
  for (auto _ : state) {
    auto out = jobs == 1 ? map_seeds_serial<RunResult>(seeds, fn) : map_seeds_parallel<RunResult>(seeds, fn, jobs);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seeds.size()));
}

void BM_ReplicasSerial(benchmark::State& state) { run(state, 1); }

void BM_ReplicasParallel(benchmark::State& state) {
  unsigned hw = std::thread::hardware_concurrency();
  run(state, hw > 1 ? static_cast<int>(hw) : 2);
}

}  // namespace

BENCHMARK(BM_ReplicasSerial)->Arg(24)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplicasParallel)->Arg(24)->Arg(256)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
