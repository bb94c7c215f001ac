#include <benchmark/benchmark.h>

#include <random>

#include "cseg/cascade.hpp"

using namespace cseg;

namespace {

VolumeF random_volume(Shape3 s, Rng& rng) {
  VolumeF v(s);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& x : v.data()) x = n(rng);
  return v;
}

// Args: patch edge, levels, base channels.
CascadeConfig config_of(const benchmark::State& state) {
  CascadeConfig c;
  c.levels = static_cast<int>(state.range(1));
  c.base_channels = static_cast<int>(state.range(2));
  return c;
}

void BM_CascadeForward(benchmark::State& state) {
  const int e = static_cast<int>(state.range(0));
  Rng rng(1);
  CascadeModel m(config_of(state), 1);
  const VolumeF flair = random_volume({e, e, e}, rng), t1ce = random_volume({e, e, e}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(m.forward(flair, t1ce, GateMode::Hard));
}
BENCHMARK(BM_CascadeForward)->Args({32, 2, 4})->Args({32, 3, 8})->Unit(benchmark::kMillisecond);

void BM_CascadeTrainStep(benchmark::State& state) {
  const int e = static_cast<int>(state.range(0));
  const Shape3 s{e, e, e};
  Rng rng(2);
  CascadeModel m(config_of(state), 2);
  const VolumeF flair = random_volume(s, rng), t1ce = random_volume(s, rng);
  std::array<StepGrad, 3> g;
  for (auto& sg : g) sg.main = random_volume(s, rng);
  for (auto _ : state) {
    m.zero_grad();
    m.forward(flair, t1ce, GateMode::Soft);
    m.backward(g);
  }
}
BENCHMARK(BM_CascadeTrainStep)->Args({32, 2, 4})->Args({32, 3, 8})->Unit(benchmark::kMillisecond);

}  // namespace
