#include <benchmark/benchmark.h>

#include "stressfield/dataset.hpp"
#include "stressfield/field_grid.hpp"
#include "stressfield/losses.hpp"

using namespace stressfield;

static void BM_BuildGridOperator(benchmark::State& state) {
  const Mesh mesh = triangulate(sample_polygon(17, 2023));
  GridOptions opt;
  opt.size = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_grid_operator(mesh, opt).weights().nonZeros());
}
BENCHMARK(BM_BuildGridOperator)->Arg(40)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_PdeResidual(benchmark::State& state) {
  const SampleRecord s = simulate_sample({17, 1, 1}, 2023);
  GridOptions opt;
  opt.size = static_cast<int>(state.range(0));
  const GridOperator op = build_grid_operator(s.mesh, opt);
  const Material mat;
  for (auto _ : state) benchmark::DoNotOptimize(residual_magnitude(s.stress, s, op, mat));
}
BENCHMARK(BM_PdeResidual)->Arg(40)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_MakeTrainingSample(benchmark::State& state) {
  const SampleRecord s = simulate_sample({17, 1, 1}, 2023);
  NormalizationSpec norm;
  norm.min = {-1e7, -1e7, -1e7};
  norm.max = {1e7, 1e7, 1e7};
  GridOptions opt;
  opt.size = 40;
  for (auto _ : state) {
    benchmark::DoNotOptimize(make_training_sample<float>(s, norm, Material{}, &opt).ax.data());
  }
}
BENCHMARK(BM_MakeTrainingSample)->Unit(benchmark::kMillisecond);
