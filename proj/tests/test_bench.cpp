#include <atomic>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "perfcnn/bench.hpp"
#include "perfcnn/rng.hpp"

using namespace perfcnn;

namespace {

const char* kPlainNet = R"(input x=8 y=8 s=2
conv d=3 t=4 pad=1
relu
maxpool d=3 stride=2
gap
fc t=3
)";

const char* kPerfNet = R"(input x=8 y=8 s=2
conv d=3 t=4 pad=1 perf=uniform r=3/4 seed=1
relu
maxpool d=3 stride=2
gap
fc t=3
)";

}  // namespace

TEST_CASE("static accounting: hand-counted multiplications and bytes") {
  const CostReport report = account(parse_network_spec(kPlainNet), 4);
  REQUIRE(report.layers.size() == 5);
  // conv: 3*3 * 2 in-channels * 4 out-channels * 64 positions
  CHECK(report.layers[0].mults == 9ull * 2 * 4 * 64);
  CHECK(report.layers[1].mults == 0);  // relu
  CHECK(report.layers[2].mults == 0);  // maxpool
  CHECK(report.layers[3].mults == 0);  // gap
  CHECK(report.layers[4].mults == 4ull * 3);  // fc on 4 pooled features
  CHECK(report.total_mults == 9ull * 2 * 4 * 64 + 12);
  CHECK(report.total_mults == report.baseline_mults);
  CHECK(report.theoretical_speedup == doctest::Approx(1.0));
  CHECK(report.memory_ratio == doctest::Approx(1.0));
  // Activation storage: input + conv + relu + pool(4x4x4) + gap + fc, 4 bytes each.
  const std::size_t want_bytes =
      4ull * (8 * 8 * 2 + 64 * 4 + 64 * 4 + 16 * 4 + 4 + 3);
  CHECK(report.total_activation_bytes == want_bytes);
  CHECK(report.baseline_activation_bytes == want_bytes);
  CHECK(report.element_bytes == 4);
  CHECK_FALSE(report.timed);
}

TEST_CASE("static accounting scales bytes with the element size") {
  const NetworkSpec spec = parse_network_spec(kPlainNet);
  const CostReport four = account(spec, 4);
  const CostReport eight = account(spec, 8);
  CHECK(eight.total_activation_bytes == 2 * four.total_activation_bytes);
  CHECK(eight.total_mults == four.total_mults);
}

TEST_CASE("perforated conv is billed exactly mask rows worth of mults and bytes") {
  const CostReport report = account(parse_network_spec(kPerfNet), 4);
  const LayerCost& conv = report.layers[0];
  CHECK(conv.rows == 16);  // r=3/4 on 64 positions
  CHECK(conv.grid_total == 64);
  CHECK(conv.rate == doctest::Approx(0.75));
  CHECK(conv.mults == 9ull * 2 * 4 * 16);
  CHECK(conv.baseline_mults == 9ull * 2 * 4 * 16 * 4);  // exactly 4x
  CHECK(conv.baseline_mults % conv.mults == 0);
  CHECK(conv.activation_bytes == 16ull * 4 * 4);
  CHECK(conv.baseline_activation_bytes == 64ull * 4 * 4);
  // Compact storage is exactly (1 - r) of dense storage.
  CHECK(conv.activation_bytes * 4 == conv.baseline_activation_bytes);
  // relu stays compact; maxpool lands dense again.
  CHECK(report.layers[1].rows == 16);
  CHECK(report.layers[2].rows == 16);
  CHECK(report.memory_ratio > 1.0);
  CHECK(report.theoretical_speedup > 1.0);
}

TEST_CASE("dense storage bills the full grid for bytes but not for mults") {
  const NetworkSpec spec = parse_network_spec(kPerfNet);
  const CostReport compact = account(spec, 4, Storage::compact);
  const CostReport dense = account(spec, 4, Storage::dense);
  CHECK(dense.total_mults == compact.total_mults);
  CHECK(dense.layers[0].mults == compact.layers[0].mults);
  CHECK(dense.layers[0].activation_bytes == dense.layers[0].baseline_activation_bytes);
  CHECK(dense.layers[1].rows == 64);
  CHECK(dense.total_activation_bytes == dense.baseline_activation_bytes);
  CHECK(dense.memory_ratio == doctest::Approx(1.0));
  CHECK(dense.theoretical_speedup == doctest::Approx(compact.theoretical_speedup));
}

TEST_CASE("spec accounting agrees with live-network accounting") {
  for (const char* text : {kPlainNet, kPerfNet}) {
    const NetworkSpec spec = parse_network_spec(text);
    const CostReport from_spec = account(spec, sizeof(float));
    const Network<float> net(spec, 7);
    const CostReport from_net = account(net);
    REQUIRE(from_spec.layers.size() == from_net.layers.size());
    for (std::size_t i = 0; i < from_spec.layers.size(); ++i) {
      CAPTURE(i);
      CHECK(from_spec.layers[i].mults == from_net.layers[i].mults);
      CHECK(from_spec.layers[i].rows == from_net.layers[i].rows);
      CHECK(from_spec.layers[i].activation_bytes == from_net.layers[i].activation_bytes);
    }
    CHECK(from_spec.total_mults == from_net.total_mults);
    CHECK(from_spec.baseline_mults == from_net.baseline_mults);
    CHECK(from_spec.total_activation_bytes == from_net.total_activation_bytes);
    CHECK(from_spec.theoretical_speedup ==
          doctest::Approx(from_net.theoretical_speedup).epsilon(1e-12));
  }
}

TEST_CASE("grid attachments quantize to the realized lattice in both accountings") {
  const char* grid_net = R"(input x=12 y=12 s=1
conv d=3 t=2 pad=1 perf=grid r=2/3 seed=5
gap
fc t=2
)";
  const NetworkSpec spec = parse_network_spec(grid_net);
  const CostReport from_spec = account(spec, sizeof(float));
  const Network<float> net(spec, 3);
  const CostReport from_net = account(net);
  // 144 positions at r=2/3 requests 48; the lattice realizes 6x6 = 36.
  const auto [kx, ky] = grid_lattice_counts(12, 12, 48);
  CHECK(from_spec.layers[0].rows == static_cast<std::size_t>(kx) * ky);
  CHECK(from_net.layers[0].rows == from_spec.layers[0].rows);
  CHECK(from_net.layers[0].mults == from_spec.layers[0].mults);
}

TEST_CASE("grouped convs divide the in-channel term") {
  const char* grouped = R"(input x=8 y=8 s=4
conv d=3 t=6 pad=1 group=2
)";
  const CostReport report = account(parse_network_spec(grouped), 4);
  CHECK(report.layers[0].mults == 9ull * (4 / 2) * 6 * 64);
}

TEST_CASE("1x1 convs after a perforated conv are billed the compact rows") {
  const char* chain = R"(input x=10 y=10 s=2
conv d=3 t=6 pad=1 perf=uniform r=3/4 seed=2
relu
conv d=1 t=8
gap
fc t=4
)";
  const CostReport report = account(parse_network_spec(chain), 4);
  CHECK(report.layers[0].rows == 25);
  CHECK(report.layers[2].rows == 25);
  CHECK(report.layers[2].mults == 1ull * 6 * 8 * 25);
  CHECK(report.layers[2].baseline_mults == 1ull * 6 * 8 * 100);
}

TEST_CASE("time_callable: statistics over repetitions") {
  CHECK_THROWS_AS(time_callable([] {}, 2, 0), std::invalid_argument);
  std::atomic<int> calls{0};
  volatile double sink = 0.0;
  const TimingStats stats = time_callable(
      [&] {
        ++calls;
        double acc = 0.0;
        for (int i = 0; i < 20000; ++i) acc += static_cast<double>(i) * 0.5;
        sink = acc;
      },
      9, 2);
  CHECK(calls.load() == 11);  // 2 warmup + 9 timed
  CHECK(stats.repetitions == 9);
  CHECK(stats.median_s > 0.0);
  CHECK(stats.mean_s > 0.0);
  CHECK(stats.iqr_s >= 0.0);
  CHECK(stats.iqr_s < stats.median_s * 100);  // sanity: IQR is a spread, not garbage
}

TEST_CASE("time_forward: wall-clock speedup fields are populated") {
  const NetworkSpec spec = parse_network_spec(kPerfNet);
  const Network<float> net(spec, 7);
  Rng rng(1);
  const Tensor3<float> input = Tensor3<float>::random(8, 8, 2, rng);
  const CostReport report = time_forward(net, input, 5, 1);
  CHECK(report.timed);
  CHECK(report.timing.repetitions == 5);
  CHECK(report.timing.median_s > 0.0);
  CHECK(report.baseline_timing.median_s > 0.0);
  CHECK(report.empirical_speedup ==
        doctest::Approx(report.baseline_timing.median_s / report.timing.median_s));
  CHECK(report.threads == 1);
  // The static numbers inside the timed report match plain accounting.
  const CostReport plain = account(net);
  CHECK(report.total_mults == plain.total_mults);
  CHECK(report.baseline_mults == plain.baseline_mults);
  CHECK_THROWS_AS(time_forward(net, input, 2, 0), std::invalid_argument);
}

TEST_CASE("cost report CSV: documented column order, layer rows, total row") {
  const CostReport report = account(parse_network_spec(kPerfNet), 4);
  const std::string csv = cost_report_csv(report);
  CHECK(csv.find("layer,kind,d,group,rows,grid,rate,mults,baseline_mults,activation_bytes,"
                 "baseline_activation_bytes,theoretical_speedup,memory_ratio,median_s,iqr_s,"
                 "mean_s,baseline_median_s,baseline_iqr_s,baseline_mean_s,empirical_speedup,"
                 "threads,timer_ok\n") == 0);
  CHECK(csv.find("1,conv,3,1,16,64,") != std::string::npos);
  CHECK(csv.find("\ntotal,") != std::string::npos);
  // Five layers plus header and total: seven lines.
  std::size_t lines = 0;
  for (char ch : csv) lines += ch == '\n' ? 1 : 0;
  CHECK(lines == 7);

  const std::string table = cost_report_table(report);
  CHECK(table.find("total") != std::string::npos);
  CHECK(table.find("conv") != std::string::npos);
}
