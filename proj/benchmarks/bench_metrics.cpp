#include <benchmark/benchmark.h>

#include "cseg/metrics.hpp"
#include "cseg/phantom.hpp"

using namespace cseg;

namespace {

// Two slightly different phantom tumours, so surfaces are realistic.
std::pair<RegionMask, RegionMask> phantom_pair(int edge) {
  auto a = PhantomParams::defaults_for({edge, edge, edge});
  a.seed = 1;
  auto b = a;
  b.seed = 2;
  return {region_mask_from_labels(generate_case(a).labels, Region::WT),
          region_mask_from_labels(generate_case(b).labels, Region::WT)};
}

void BM_DistanceTransform(benchmark::State& state) {
  const int e = static_cast<int>(state.range(0));
  const auto [a, b] = phantom_pair(e);
  const auto surface = surface_voxels(a.mask);
  for (auto _ : state) benchmark::DoNotOptimize(squared_distance_transform(surface, {1.0, 1.0, 1.0}));
  state.SetItemsProcessed(state.iterations() * e * e * e);
}
BENCHMARK(BM_DistanceTransform)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Hausdorff(benchmark::State& state) {
  const int e = static_cast<int>(state.range(0));
  const auto [a, b] = phantom_pair(e);
  for (auto _ : state) benchmark::DoNotOptimize(hausdorff(a, b, {1.0, 1.0, 1.0}, 95.0));
}
BENCHMARK(BM_Hausdorff)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Dice(benchmark::State& state) {
  const auto [a, b] = phantom_pair(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dice(a, b));
}
BENCHMARK(BM_Dice)->Arg(128)->Unit(benchmark::kMicrosecond);

}  // namespace
