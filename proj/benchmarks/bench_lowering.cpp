#include <benchmark/benchmark.h>

#include "perfcnn/index_set.hpp"
#include "perfcnn/lowering.hpp"
#include "perfcnn/masks.hpp"
#include "perfcnn/rng.hpp"
#include "perfcnn/tensor.hpp"

using namespace perfcnn;

namespace {

// Patch extraction for the full output grid of a 3x3 conv.
void bm_im2row_full(benchmark::State& state) {
  const int extent = static_cast<int>(state.range(0));
  const int channels = static_cast<int>(state.range(1));
  Rng rng(1);
  const Tensor3<float> u = Tensor3<float>::random(extent + 2, extent + 2, channels, rng);
  const SpatialIndexSet all = full_index_set(extent, extent);
  for (auto _ : state) {
    benchmark::DoNotOptimize(im2row(u, 3, all));
  }
  state.SetItemsProcessed(state.iterations() * all.size());
}

// Patch extraction for a quarter of the grid, the r = 3/4 workload.
void bm_im2row_quarter(benchmark::State& state) {
  const int extent = static_cast<int>(state.range(0));
  const int channels = static_cast<int>(state.range(1));
  Rng rng(1);
  const Tensor3<float> u = Tensor3<float>::random(extent + 2, extent + 2, channels, rng);
  const std::size_t total = static_cast<std::size_t>(extent) * extent;
  const PerforationMask mask = uniform_mask(extent, extent, total / 4, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(im2row(u, 3, mask.points));
  }
  state.SetItemsProcessed(state.iterations() * mask.size());
}

void bm_gemm(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const int k = static_cast<int>(state.range(1));
  const int n = static_cast<int>(state.range(2));
  Rng rng(1);
  std::vector<float> a(static_cast<std::size_t>(m) * k), b(static_cast<std::size_t>(k) * n),
      c(static_cast<std::size_t>(m) * n);
  for (float& v : a) v = static_cast<float>(rng.normal());
  for (float& v : b) v = static_cast<float>(rng.normal());
  for (auto _ : state) {
    gemm(a.data(), m, k, b.data(), n, c.data());
    benchmark::DoNotOptimize(c.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m) * k * n);
}

}  // namespace

BENCHMARK(bm_im2row_full)->Args({16, 16})->Args({32, 64})->Args({56, 128});
BENCHMARK(bm_im2row_quarter)->Args({16, 16})->Args({32, 64})->Args({56, 128});
BENCHMARK(bm_gemm)
    ->Args({64, 64, 64})
    ->Args({256, 256, 256})
    ->Args({1024, 576, 96})   // 24x24 grid of 3x3x64 patches by 96 filters
    ->Args({289, 576, 96});   // the same conv perforated at r = 3/4
