#include <benchmark/benchmark.h>

#include "birotation/residuals.hpp"
#include "birotation/solver.hpp"
#include "birotation/synth.hpp"

namespace birot {
namespace {

LabeledPair Pair(int n_points, double sigma) {
  SceneSpec spec;
  spec.n_points = n_points;
  spec.seed = 7;
  return ApplyNoise(GenerateScene(spec), NoiseSpec{sigma, 0.0, 10.0}, 8);
}

void BM_Residuals(benchmark::State& state) {
  const LabeledPair pair = Pair(static_cast<int>(state.range(0)), 0.5);
  const Rotation r1 = ExpSO3(Vec3(0.1, -0.2, 0.05));
  for (auto _ : state) {
    benchmark::DoNotOptimize(EvaluateModel(Axis::kX, r1, Rotation(), pair.set, false));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Residuals)->Arg(200)->Arg(2000);

void BM_ResidualsAndJacobian(benchmark::State& state) {
  const LabeledPair pair = Pair(static_cast<int>(state.range(0)), 0.5);
  const Rotation r1 = ExpSO3(Vec3(0.1, -0.2, 0.05));
  for (auto _ : state) {
    benchmark::DoNotOptimize(EvaluateModel(Axis::kZ, r1, Rotation(), pair.set, true));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ResidualsAndJacobian)->Arg(200)->Arg(2000);

void BM_Step(benchmark::State& state) {
  const LabeledPair pair = Pair(static_cast<int>(state.range(0)), 0.5);
  Rng rng(3);
  const PriorPose prior = PerturbPose(pair.truth_rotation, pair.truth_translation, 5, 5, rng);
  const SolverConfig cfg;
  ModelState st = InitializeModels(prior)[0];
  RefreshMetric(st, pair.set, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(Step(st, pair.set, cfg));
}
BENCHMARK(BM_Step)->Arg(200)->Arg(2000);

void BM_Solve(benchmark::State& state) {
  const LabeledPair pair = Pair(static_cast<int>(state.range(0)), 0.5);
  Rng rng(4);
  const PriorPose prior = PerturbPose(pair.truth_rotation, pair.truth_translation, 5, 5, rng);
  const SolverConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(Solve(pair.set, prior, cfg));
}
BENCHMARK(BM_Solve)->Arg(200)->Arg(2000)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace birot

// The packaged benchmark_main archive carries LTO bytecode from another
// compiler release, so the entry point is defined here.
BENCHMARK_MAIN();
