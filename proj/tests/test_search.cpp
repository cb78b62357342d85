#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "perfcnn/bench.hpp"
#include "perfcnn/rng.hpp"
#include "perfcnn/search.hpp"
#include "perfcnn/synth.hpp"

using namespace perfcnn;

namespace {

const char* kTwoConvNet = R"(input x=12 y=12 s=2
conv d=3 t=6 pad=1
relu
maxpool d=3 stride=2
conv d=3 t=8 pad=1
relu
gap
fc t=4
)";

template <typename Real>
Dataset<Real> small_data(std::size_t count) {
  SyntheticImageSpec spec;
  spec.x = spec.y = 12;
  spec.channels = 2;
  spec.classes = 4;
  spec.seed = 3;
  return make_synthetic_images<Real>(spec, count, "train");
}

}  // namespace

TEST_CASE("default_rate_ladder: 1/3 then k/(k+1), strictly increasing") {
  const std::vector<Rational> ladder = default_rate_ladder();
  REQUIRE(ladder.size() == 20);
  CHECK(ladder[0] == Rational(1, 3));
  CHECK(ladder[1] == Rational(1, 2));
  CHECK(ladder[2] == Rational(2, 3));
  CHECK(ladder[3] == Rational(3, 4));
  CHECK(ladder[19] == Rational(19, 20));
  for (std::size_t i = 1; i < ladder.size(); ++i)
    CHECK(ladder[i - 1].value() < ladder[i].value());
}

TEST_CASE("candidate cost: error increase per unit of cost saved") {
  CandidateEvaluation a;
  a.e0 = 1.0;
  a.t0 = 100.0;
  a.e = 1.1;
  a.t = 60.0;
  CHECK(a.cost() == doctest::Approx(0.0025).epsilon(1e-12));
  CHECK(a.speedup() == doctest::Approx(100.0 / 60.0).epsilon(1e-12));
  CandidateEvaluation b = a;
  b.e = 1.3;
  b.t = 40.0;
  CHECK(b.cost() == doctest::Approx(0.005).epsilon(1e-12));
  CHECK(a.cost() < b.cost());  // smaller error per saved mult wins
}

TEST_CASE("mask config: serialize/parse round-trip") {
  std::vector<MaskChoice> choices;
  choices.push_back({1, MaskType::grid, Rational(3, 4), 7});
  choices.push_back({4, MaskType::impact, Rational(2, 3), 123456789});
  const std::string text = serialize_mask_config(choices);
  CHECK(parse_mask_config(text) == choices);
  // Comments and blank lines are tolerated.
  CHECK(parse_mask_config("# all masks\n\n" + text) == choices);
}

TEST_CASE("mask config: parse errors") {
  CHECK_THROWS_AS(parse_mask_config("layer=1 mask=grid\n"), std::invalid_argument);  // no r
  CHECK_THROWS_AS(parse_mask_config("layer=1 r=1/2\n"), std::invalid_argument);      // no mask
  CHECK_THROWS_AS(parse_mask_config("mask=grid r=1/2\n"), std::invalid_argument);    // no layer
  CHECK_THROWS_AS(parse_mask_config("layer=0 mask=grid r=1/2\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_mask_config("layer=1 mask=blob r=1/2\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_mask_config("layer=1 mask=grid r=0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_mask_config("layer=1 mask=grid r=5/4\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_mask_config("layer=1 mask=grid r=1/2\nlayer=1 mask=grid r=2/3\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_mask_config("layer=1 mask=grid r=1/2 shape=9\n"), std::invalid_argument);
  CHECK(parse_mask_config("").empty());
}

TEST_CASE("apply_mask_config matches direct set_perforation and clears old masks") {
  Network<float> net(parse_network_spec(kTwoConvNet), 5);
  net.set_perforation(4, MaskType::uniform, Rational(1, 2), 77);  // will be cleared

  std::vector<MaskChoice> choices;
  choices.push_back({1, MaskType::grid, Rational(3, 4), 9});
  apply_mask_config(net, choices);
  CHECK(net.is_perforated(1));
  CHECK_FALSE(net.is_perforated(4));  // config replaces all perforation

  Network<float> direct(parse_network_spec(kTwoConvNet), 5);
  direct.set_perforation(1, MaskType::grid, Rational(3, 4), 9);
  const auto* a = dynamic_cast<const ConvLayer<float>*>(&net.layer(1));
  const auto* b = dynamic_cast<const ConvLayer<float>*>(&direct.layer(1));
  CHECK(a->mask().points.points == b->mask().points.points);
}

TEST_CASE("perforation config lists only perforated layers as choices") {
  PerforationConfig config;
  config.ladder = {Rational(1, 2), Rational(3, 4)};
  config.layers.push_back({1, MaskType::grid, -1, 5});
  config.layers.push_back({4, MaskType::uniform, 1, 6});
  const std::vector<MaskChoice> choices = config.choices();
  REQUIRE(choices.size() == 1);
  CHECK(choices[0].layer == 4);
  CHECK(choices[0].rate == Rational(3, 4));
  CHECK(choices[0].seed == 6);
}

TEST_CASE("evaluate_config: identity config reproduces the baseline") {
  const Network<float> net(parse_network_spec(kTwoConvNet), 5);
  const Dataset<float> data = small_data<float>(8);
  PerforationConfig config;
  config.ladder = default_rate_ladder();
  for (int layer : net.perforable_layers())
    config.layers.push_back({layer, MaskType::grid, -1, 1});
  const CandidateEvaluation eval = evaluate_config(net, config, data);
  CHECK(eval.t == eval.t0);
  CHECK(eval.e == doctest::Approx(eval.e0).epsilon(1e-12));
  CHECK(eval.speedup() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("evaluate_config: perforation lowers t to the theoretical mult count") {
  const Network<float> net(parse_network_spec(kTwoConvNet), 5);
  const Dataset<float> data = small_data<float>(8);
  PerforationConfig config;
  config.ladder = {Rational(1, 2), Rational(3, 4)};
  for (int layer : net.perforable_layers())
    config.layers.push_back({layer, MaskType::uniform, 1, 1});  // both convs at 3/4
  const CandidateEvaluation eval = evaluate_config(net, config, data);
  CHECK(eval.t < eval.t0);

  // Cross-check against the static accounting of an identically configured net.
  Network<float> configured = net;
  apply_mask_config(configured, config.choices());
  const CostReport report = account(configured);
  CHECK(eval.t == doctest::Approx(static_cast<double>(report.total_mults)).epsilon(1e-12));
  CHECK(eval.t0 ==
        doctest::Approx(static_cast<double>(report.baseline_mults)).epsilon(1e-12));

  // The evaluation is pure: the original network still has no masks.
  for (int layer : net.perforable_layers()) CHECK_FALSE(net.is_perforated(layer));
}

TEST_CASE("greedy search walks the ladder with strictly decreasing cost") {
  const Network<float> net(parse_network_spec(kTwoConvNet), 5);
  const Dataset<float> data = small_data<float>(8);
  GreedyOptions options;
  options.target_speedup = 2.0;
  options.type = MaskType::grid;
  options.seed = 11;
  const GreedyResult result = greedy_configure(net, data, options);
  REQUIRE_FALSE(result.trace.empty());
  double prev_t = result.evaluation.t0;
  for (std::size_t i = 0; i < result.trace.size(); ++i) {
    const SearchTraceRow& row = result.trace[i];
    CHECK(row.step == static_cast<int>(i) + 1);
    CHECK((row.layer == 1 || row.layer == 4));
    CHECK(row.t < prev_t);
    prev_t = row.t;
  }
  CHECK(result.evaluation.t == doctest::Approx(result.trace.back().t).epsilon(1e-12));
  if (result.reached_target) {
    CHECK(result.evaluation.speedup() >= options.target_speedup);
  }
  // Per-layer rungs in the config match the last trace entry for that layer.
  for (const LayerRate& lr : result.config.layers) {
    int last_rung = -1;
    for (const SearchTraceRow& row : result.trace) {
      if (row.layer != lr.layer) continue;
      // Trace rates are ladder values; recover the rung index.
      for (std::size_t r = 0; r < result.config.ladder.size(); ++r)
        if (result.config.ladder[r] == row.rate) last_rung = static_cast<int>(r);
    }
    CHECK(lr.rung == last_rung);
    CHECK(lr.seed == derive_seed(options.seed, "mask.layer" + std::to_string(lr.layer)));
  }
}

TEST_CASE("greedy search is deterministic under the mults model") {
  const Network<float> net(parse_network_spec(kTwoConvNet), 5);
  const Dataset<float> data = small_data<float>(8);
  GreedyOptions options;
  options.target_speedup = 2.5;
  options.type = MaskType::uniform;
  options.seed = 21;
  const GreedyResult a = greedy_configure(net, data, options);
  const GreedyResult b = greedy_configure(net, data, options);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].layer == b.trace[i].layer);
    CHECK(a.trace[i].rate == b.trace[i].rate);
    CHECK(a.trace[i].t == b.trace[i].t);
    CHECK(a.trace[i].e == b.trace[i].e);
  }
}

TEST_CASE("single-layer greedy climbs its own ladder rung by cost-reducing rung") {
  const char* one_conv = R"(input x=12 y=12 s=2
conv d=3 t=6 pad=1
relu
gap
fc t=4
)";
  const Network<float> net(parse_network_spec(one_conv), 5);
  const Dataset<float> data = small_data<float>(6);
  GreedyOptions options;
  options.target_speedup = 3.0;
  options.type = MaskType::uniform;
  options.seed = 7;
  options.ladder = {Rational(1, 2), Rational(3, 4), Rational(9, 10)};
  const GreedyResult result = greedy_configure(net, data, options);
  // One perforable layer: every accepted step belongs to it and rates ascend.
  double prev = 0.0;
  for (const SearchTraceRow& row : result.trace) {
    CHECK(row.layer == 1);
    CHECK(row.rate.value() > prev);
    prev = row.rate.value();
  }
  REQUIRE_FALSE(result.trace.empty());
  // 144 positions: rungs keep 72, 36, 14 rows; all three strictly reduce
  // mults, so the walk must visit them in order until the target is met.
  CHECK(result.trace[0].rate == Rational(1, 2));
  if (result.trace.size() > 1) CHECK(result.trace[1].rate == Rational(3, 4));
  CHECK(result.reached_target == (result.evaluation.speedup() >= 3.0));
}

TEST_CASE("greedy throws when no rate increase can lower the cost") {
  // A network whose only conv is 1x1 (not perforable) cannot be sped up.
  const char* fixed = R"(input x=6 y=6 s=2
conv d=1 t=4
gap
fc t=2
)";
  const Network<float> net(parse_network_spec(fixed), 5);
  const Dataset<float> data = [] {
    SyntheticImageSpec spec;
    spec.x = spec.y = 6;
    spec.channels = 2;
    spec.classes = 2;
    return make_synthetic_images<float>(spec, 4, "train");
  }();
  GreedyOptions options;
  options.target_speedup = 2.0;
  CHECK_THROWS_AS(greedy_configure(net, data, options), std::runtime_error);
}

TEST_CASE("greedy validates its options") {
  const Network<float> net(parse_network_spec(kTwoConvNet), 5);
  const Dataset<float> data = small_data<float>(4);
  GreedyOptions options;
  options.target_speedup = 1.0;
  CHECK_THROWS_AS(greedy_configure(net, data, options), std::invalid_argument);
  options.target_speedup = 2.0;
  options.ladder = {Rational(3, 4), Rational(1, 2)};  // not increasing
  CHECK_THROWS_AS(greedy_configure(net, data, options), std::invalid_argument);
  options.ladder.clear();
  CHECK_THROWS_AS(greedy_configure(net, Dataset<float>{}, options), std::invalid_argument);
}

TEST_CASE("trace_csv carries the documented header and rows") {
  std::vector<SearchTraceRow> rows;
  rows.push_back({1, 4, Rational(1, 2), 1000.0, 0.5, 0.001});
  const std::string csv = trace_csv(rows);
  CHECK(csv.find("step,layer,rate,t,e,cost\n") == 0);
  CHECK(csv.find("1,4,1/2,") != std::string::npos);
}

TEST_CASE("pareto front: kept points are mutually non-dominated and cover the rest") {
  Rng rng(13);
  std::vector<CandidateEvaluation> evals(40);
  for (CandidateEvaluation& ev : evals) {
    ev.t0 = 100.0;
    ev.e0 = 1.0;
    ev.t = 10.0 + 90.0 * rng.real01();
    ev.e = 1.0 + rng.real01();
  }
  const std::vector<std::size_t> front = pareto_front(evals);
  REQUIRE_FALSE(front.empty());
  const auto dominates = [&](std::size_t i, std::size_t j) {
    const double si = evals[i].speedup(), sj = evals[j].speedup();
    return si >= sj && evals[i].e <= evals[j].e && (si > sj || evals[i].e < evals[j].e);
  };
  for (std::size_t i = 1; i < front.size(); ++i)
    CHECK(evals[front[i - 1]].speedup() <= evals[front[i]].speedup());
  for (std::size_t a : front)
    for (std::size_t b : front) CHECK_FALSE(dominates(a, b));
  for (std::size_t j = 0; j < evals.size(); ++j) {
    if (std::find(front.begin(), front.end(), j) != front.end()) continue;
    bool covered = false;
    for (std::size_t a : front) covered = covered || dominates(a, j);
    CHECK(covered);
  }
  CHECK_THROWS_AS(pareto_front({}), std::invalid_argument);
}

TEST_CASE("exhaustive search enumerates every rung combination") {
  const char* one_conv = R"(input x=12 y=12 s=2
conv d=3 t=6 pad=1
relu
gap
fc t=4
)";
  const Network<float> net(parse_network_spec(one_conv), 5);
  const Dataset<float> data = small_data<float>(4);
  GreedyOptions options;
  options.type = MaskType::uniform;
  options.seed = 3;
  options.ladder = {Rational(1, 2), Rational(3, 4)};
  const std::vector<ExhaustivePoint> points = exhaustive_search(net, data, options);
  CHECK(points.size() == 3);  // unperforated + two rungs
  bool saw_baseline = false;
  for (const ExhaustivePoint& p : points) {
    saw_baseline = saw_baseline || p.config.choices().empty();
    CHECK(p.evaluation.t0 == points[0].evaluation.t0);
  }
  CHECK(saw_baseline);
}

TEST_CASE("exhaustive search refuses more than three perforable layers") {
  const char* four = R"(input x=20 y=20 s=1
conv d=3 t=2 pad=1
conv d=3 t=2 pad=1
conv d=3 t=2 pad=1
conv d=3 t=2 pad=1
gap
fc t=2
)";
  const Network<float> net(parse_network_spec(four), 5);
  SyntheticImageSpec spec;
  spec.x = spec.y = 20;
  spec.channels = 1;
  spec.classes = 2;
  const Dataset<float> data = make_synthetic_images<float>(spec, 4, "train");
  GreedyOptions options;
  CHECK_THROWS_AS(exhaustive_search(net, data, options), std::invalid_argument);
}

TEST_CASE("cost model names round-trip") {
  CHECK(cost_model_from_name(cost_model_name(CostModel::mults)) == CostModel::mults);
  CHECK(cost_model_from_name(cost_model_name(CostModel::time)) == CostModel::time);
  CHECK_THROWS_AS(cost_model_from_name("joules"), std::invalid_argument);
}
