#include <benchmark/benchmark.h>

#include "sdtp/analysis.hpp"
#include "sdtp/geomsum.hpp"
#include "sdtp/objective.hpp"
#include "sdtp/optimizer.hpp"
#include "sdtp/simulator.hpp"
#include "util/instances.hpp"

namespace {

using namespace sdtp;

const testutil::SmallInstance& desk() {
  static testutil::SmallInstance inst = testutil::desk_instance(4, 50, 5, 10);
  return inst;
}

void BM_HsumKernel(benchmark::State& state) {
  double x = -0.31, m = 2e-6;
  double n = static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(hsum(x, m, n));
  }
}
BENCHMARK(BM_HsumKernel)->Arg(8)->Arg(150);

void BM_ObjectiveEvaluate(benchmark::State& state) {
  const auto& inst = desk();
  const BoundEvaluator eval(inst.topo, inst.cat, inst.cat.sigma);
  const Decision d = Decision::from_point(inst.point);
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval.evaluate(d).objective);
  }
}
BENCHMARK(BM_ObjectiveEvaluate);

void BM_ObjectiveGradient(benchmark::State& state) {
  const auto& inst = desk();
  const BoundEvaluator eval(inst.topo, inst.cat, inst.cat.sigma);
  const Decision d = Decision::from_point(inst.point);
  Gradients g;
  const VarBlock blocks[] = {VarBlock::kSchedule, VarBlock::kAux,
                             VarBlock::kBandwidth, VarBlock::kPlacement};
  const VarBlock block = blocks[state.range(0)];
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        eval.evaluate_with_gradient(d, block, &g).objective);
  }
}
BENCHMARK(BM_ObjectiveGradient)->DenseRange(0, 3);

void BM_ReferenceBound(benchmark::State& state) {
  const auto& inst = desk();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        sdtp_bound(0, inst.cat.sigma, inst.topo, inst.cat, inst.point).raw);
  }
}
BENCHMARK(BM_ReferenceBound);

void BM_Simulate(benchmark::State& state) {
  testutil::SmallInstance inst = testutil::random_small_instance(5);
  SimConfig cfg{inst.topo, inst.cat, inst.point};
  double lam = 0.0;
  for (double l : inst.cat.arrival_rate) lam += l;
  cfg.horizon = 10000.0 / lam;  // ~1e4 requests per iteration
  cfg.keep_segments = false;
  for (auto _ : state) {
    cfg.seed++;
    benchmark::DoNotOptimize(run_sim(cfg).requests.size());
  }
}
BENCHMARK(BM_Simulate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
