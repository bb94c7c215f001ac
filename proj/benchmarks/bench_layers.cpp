#include <benchmark/benchmark.h>

#include <random>

#include "cseg/layers.hpp"
#include "cseg/losses.hpp"

using namespace cseg;
using nn::Conv3d;
using nn::InstanceNorm;

namespace {

Tensor random_tensor(int channels, Shape3 s, Rng& rng) {
  Tensor t(channels, s);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& v : t.values()) v = n(rng);
  return t;
}

// Args: spatial edge, in channels, out channels.
void BM_Conv3dForward(benchmark::State& state) {
  const int e = static_cast<int>(state.range(0));
  Rng rng(1);
  Conv3d conv(static_cast<int>(state.range(1)), static_cast<int>(state.range(2)), 3, rng, "conv");
  const Tensor x = random_tensor(static_cast<int>(state.range(1)), {e, e, e}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x));
  state.SetItemsProcessed(state.iterations() * e * e * e);
}
BENCHMARK(BM_Conv3dForward)->Args({16, 4, 4})->Args({32, 4, 4})->Args({32, 8, 8})->Unit(benchmark::kMillisecond);

void BM_Conv3dBackward(benchmark::State& state) {
  const int e = static_cast<int>(state.range(0));
  Rng rng(2);
  Conv3d conv(static_cast<int>(state.range(1)), static_cast<int>(state.range(2)), 3, rng, "conv");
  const Tensor x = random_tensor(static_cast<int>(state.range(1)), {e, e, e}, rng);
  const Tensor g = random_tensor(static_cast<int>(state.range(2)), {e, e, e}, rng);
  conv.forward(x);
  for (auto _ : state) benchmark::DoNotOptimize(conv.backward(g));
  state.SetItemsProcessed(state.iterations() * e * e * e);
}
BENCHMARK(BM_Conv3dBackward)->Args({16, 4, 4})->Args({32, 4, 4})->Args({32, 8, 8})->Unit(benchmark::kMillisecond);

void BM_InstanceNormForward(benchmark::State& state) {
  const int e = static_cast<int>(state.range(0));
  Rng rng(3);
  InstanceNorm norm(8, "norm");
  const Tensor x = random_tensor(8, {e, e, e}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(norm.forward(x));
}
BENCHMARK(BM_InstanceNormForward)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_FocalLoss(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  std::vector<double> p(n), g(n);
  std::vector<std::uint8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = 0.01 + 0.98 * uniform01(rng);
    y[i] = uniform01(rng) < 0.1;
  }
  const FocalParams fp;
  for (auto _ : state) benchmark::DoNotOptimize(focal_loss(p, y, fp, g));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_FocalLoss)->Arg(32 * 32 * 32)->Unit(benchmark::kMicrosecond);

}  // namespace
