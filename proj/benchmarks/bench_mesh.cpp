#include <benchmark/benchmark.h>

#include "stressfield/geometry.hpp"

using namespace stressfield;

static void BM_SamplePolygon(benchmark::State& state) {
  int id = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_polygon(id, 2023));
    id = id % 1024 + 1;
  }
}
BENCHMARK(BM_SamplePolygon);

static void BM_Triangulate(benchmark::State& state) {
  const Polygon p = sample_polygon(17, 2023);
  const double h = 0.001 * static_cast<double>(state.range(0));
  std::size_t nodes = 0;
  for (auto _ : state) {
    const Mesh m = triangulate(p, h);
    nodes = m.num_nodes();
    benchmark::DoNotOptimize(m.triangles.data());
  }
  state.counters["nodes"] = static_cast<double>(nodes);
}
BENCHMARK(BM_Triangulate)->Arg(30)->Arg(20)->Arg(10)->Unit(benchmark::kMillisecond);
