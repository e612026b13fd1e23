#include <benchmark/benchmark.h>

#include "stressfield/dataset.hpp"
#include "stressfield/fem.hpp"

using namespace stressfield;

namespace {

Mesh bench_mesh() {
  const Polygon p = sample_polygon(17, 2023);
  return tag_edges(triangulate(p), p);
}

}  // namespace

static void BM_Assemble(benchmark::State& state) {
  const Mesh mesh = bench_mesh();
  const Material mat;
  for (auto _ : state) benchmark::DoNotOptimize(assemble(mesh, mat).stiffness.nonZeros());
  state.counters["nodes"] = static_cast<double>(mesh.num_nodes());
}
BENCHMARK(BM_Assemble)->Unit(benchmark::kMicrosecond);

static void BM_Newmark(benchmark::State& state) {
  const Mesh mesh = bench_mesh();
  SystemMatrices sys = assemble(mesh, Material{});
  fix_nodes(sys, nodes_with_labels(mesh, label_bit(EdgeLabel::E2)));
  const Eigen::MatrixXd load = Eigen::MatrixXd::Random(sys.num_dofs(), kFrames) * 100.0;
  for (auto _ : state) benchmark::DoNotOptimize(newmark_solve(sys, load, kTimeStep).displacement.data());
}
BENCHMARK(BM_Newmark)->Unit(benchmark::kMillisecond);

static void BM_SimulateSample(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(simulate_sample({17, 1, 1}, 2023).stress.data());
}
BENCHMARK(BM_SimulateSample)->Unit(benchmark::kMillisecond);
