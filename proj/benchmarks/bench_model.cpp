#include <benchmark/benchmark.h>

#include "stressfield/nn.hpp"
#include "stressfield/threads.hpp"

using namespace stressfield;

namespace {

constexpr int kNodes = 220;
constexpr int kSteps = 100;

ModelConfig config(int d, Variant v = Variant::SpatiotempoLstm) {
  ModelConfig c;
  c.d = d;
  c.variant = v;
  return c;
}

}  // namespace

static void BM_Forward(benchmark::State& state) {
  tune_allocator();
  const Model<float> model(config(static_cast<int>(state.range(0))));
  const Mat<float> x = Mat<float>::Random(kModelInputs, kNodes * kSteps);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward_sample(x, kNodes, kSteps).data());
}
BENCHMARK(BM_Forward)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_ForwardBackward(benchmark::State& state) {
  tune_allocator();
  const Model<float> model(config(static_cast<int>(state.range(0))));
  const Mat<float> x = Mat<float>::Random(kModelInputs, kNodes * kSteps);
  const Mat<float> dy = Mat<float>::Random(kModelOutputs, kNodes * kSteps);
  std::vector<float> grad(model.size(), 0.0f);
  for (auto _ : state) {
    ForwardTrace<float> trace;
    model.forward_sample(x, kNodes, kSteps, &trace);
    model.backward_sample(trace, dy, grad);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_SpatioMlpForward(benchmark::State& state) {
  const Model<float> model(config(64, Variant::SpatioMlp));
  const Mat<float> x = Mat<float>::Random(kModelInputs, kNodes * kSteps);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward_sample(x, kNodes, kSteps).data());
}
BENCHMARK(BM_SpatioMlpForward)->Unit(benchmark::kMillisecond);
