#include <benchmark/benchmark.h>

#include "perfcnn/masks.hpp"
#include "perfcnn/perfconv.hpp"
#include "perfcnn/rng.hpp"
#include "perfcnn/tensor.hpp"

using namespace perfcnn;

namespace {

// Forward pass of a 3x3, 64 -> 96 channel conv on a 34x34 output grid at the
// keep fraction num/den (num == den is the unperforated baseline). Interp
// cost is included: this is the path the empirical-speedup numbers time.
void bm_perforated_forward(benchmark::State& state) {
  const std::size_t num = static_cast<std::size_t>(state.range(0));
  const std::size_t den = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  const Tensor3<float> u = Tensor3<float>::random(36, 36, 64, rng);
  const KernelTensor<float> k = KernelTensor<float>::random(3, 64, 96, rng);
  const std::size_t total = 34 * 34;
  const PerforationMask mask = uniform_mask(34, 34, total * num / den, 9);
  const PerforatedConvLayer<float> layer(k, mask);
  for (auto _ : state) {
    benchmark::DoNotOptimize(layer.forward(u));
  }
  state.SetItemsProcessed(state.iterations() * layer.mult_count());
  state.counters["keep_rows"] = static_cast<double>(mask.size());
}

// The compact half alone: exact evaluation without densifying the grid.
void bm_perforated_compact(benchmark::State& state) {
  const std::size_t num = static_cast<std::size_t>(state.range(0));
  const std::size_t den = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  const Tensor3<float> u = Tensor3<float>::random(36, 36, 64, rng);
  const KernelTensor<float> k = KernelTensor<float>::random(3, 64, 96, rng);
  const std::size_t total = 34 * 34;
  const PerforationMask mask = uniform_mask(34, 34, total * num / den, 9);
  const PerforatedConvLayer<float> layer(k, mask);
  for (auto _ : state) {
    benchmark::DoNotOptimize(layer.forward_compact(u));
  }
  state.SetItemsProcessed(state.iterations() * layer.mult_count());
}

void bm_interp_strategies(benchmark::State& state) {
  const Interp strategy = static_cast<Interp>(state.range(0));
  Rng rng(1);
  const Tensor3<float> u = Tensor3<float>::random(36, 36, 64, rng);
  const KernelTensor<float> k = KernelTensor<float>::random(3, 64, 96, rng);
  const PerforationMask mask = uniform_mask(34, 34, 289, 9);
  const PerforatedConvLayer<float> layer(k, mask, strategy);
  const std::vector<float> compact = layer.forward_compact(u).values;
  for (auto _ : state) {
    benchmark::DoNotOptimize(layer.interpolate(compact));
  }
}

}  // namespace

BENCHMARK(bm_perforated_forward)
    ->Args({1, 1})    // r = 0 baseline
    ->Args({1, 2})    // r = 1/2
    ->Args({1, 4})    // r = 3/4
    ->Args({1, 10});  // r = 9/10
BENCHMARK(bm_perforated_compact)->Args({1, 1})->Args({1, 4});
BENCHMARK(bm_interp_strategies)
    ->Arg(static_cast<int>(Interp::nearest))
    ->Arg(static_cast<int>(Interp::zero))
    ->Arg(static_cast<int>(Interp::barycentric));
