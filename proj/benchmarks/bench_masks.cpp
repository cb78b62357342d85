#include <benchmark/benchmark.h>

#include "perfcnn/interp.hpp"
#include "perfcnn/masks.hpp"
#include "perfcnn/rng.hpp"

using namespace perfcnn;

namespace {

void bm_uniform_mask(benchmark::State& state) {
  const int extent = static_cast<int>(state.range(0));
  const std::size_t n = static_cast<std::size_t>(extent) * extent / 4;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(uniform_mask(extent, extent, n, seed++));
  }
}

void bm_grid_mask(benchmark::State& state) {
  const int extent = static_cast<int>(state.range(0));
  const std::size_t n = static_cast<std::size_t>(extent) * extent / 4;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(grid_mask(extent, extent, n, seed++));
  }
}

void bm_structure_mask(benchmark::State& state) {
  const int extent = static_cast<int>(state.range(0));
  const std::size_t n = static_cast<std::size_t>(extent) * extent / 4;
  PoolGeometry pool;
  pool.size = 3;
  pool.stride = 2;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(top_n_by_weight(pooling_usage_counts(extent, extent, pool), n,
                                             seed++));
  }
}

void bm_neighbor_map(benchmark::State& state) {
  const int extent = static_cast<int>(state.range(0));
  const std::size_t n = static_cast<std::size_t>(extent) * extent / 4;
  const PerforationMask mask = uniform_mask(extent, extent, n, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(neighbor_map(mask));
  }
}

void bm_interp_plan(benchmark::State& state) {
  const int extent = static_cast<int>(state.range(0));
  const Interp strategy = static_cast<Interp>(state.range(1));
  const std::size_t n = static_cast<std::size_t>(extent) * extent / 4;
  const PerforationMask mask = uniform_mask(extent, extent, n, 5);
  const NeighborMap nmap = neighbor_map(mask);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_interp_plan(mask, nmap, strategy));
  }
}

}  // namespace

BENCHMARK(bm_uniform_mask)->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(bm_grid_mask)->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(bm_structure_mask)->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(bm_neighbor_map)->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(bm_interp_plan)
    ->Args({32, static_cast<int>(Interp::nearest)})
    ->Args({32, static_cast<int>(Interp::barycentric)})
    ->Args({64, static_cast<int>(Interp::nearest)})
    ->Args({64, static_cast<int>(Interp::barycentric)});
