#include "perfcnn/cli.hpp"

#include <algorithm>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "perfcnn/bench.hpp"
#include "perfcnn/index_set.hpp"
#include "perfcnn/io.hpp"
#include "perfcnn/masks.hpp"
#include "perfcnn/net_spec.hpp"
#include "perfcnn/network.hpp"
#include "perfcnn/rational.hpp"
#include "perfcnn/rng.hpp"
#include "perfcnn/search.hpp"

namespace perfcnn {

namespace {

using Real = float;  // the command line runs networks in single precision

// Options shared by every subcommand. The one global seed fans out through
// derive_seed(seed, component); the component names are part of the CLI
// contract: "init" (weight initialization), "mask" (cmd_mask generation),
// "mask.layer<i>" (per-layer masks in sweeps and searches), "search"
// (greedy search), "train" (SGD), "bench.input" (the timing input tensor).
struct CommonArgs {
  std::uint64_t seed = 1;
  std::string interp = "nearest";
  std::string storage = "compact";
};

void add_common(CLI::App* cmd, CommonArgs& c) {
  cmd->add_option("--seed", c.seed, "Global seed; every stochastic component derives its own");
  cmd->add_option("--interp", c.interp, "Interpolation strategy: nearest, zero or bary");
  cmd->add_option("--storage", c.storage,
                  "Activation storage after perforated convs: compact or dense");
}

// "16x16" -> {16, 16}
std::pair<int, int> parse_extent_pair(const std::string& text, const std::string& what) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument("no x");
    const int a = std::stoi(text.substr(0, x));
    const int b = std::stoi(text.substr(x + 1));
    if (a < 1 || b < 1) throw std::invalid_argument("not positive");
    return {a, b};
  } catch (const std::exception&) {
    throw std::invalid_argument("bad " + what + " '" + text + "': expected WIDTHxHEIGHT like 16x16");
  }
}

NetworkSpec load_spec(const std::string& path) {
  constexpr std::string_view kBuiltin = "builtin:";
  if (path.rfind(kBuiltin, 0) == 0) {
    return parse_network_spec(builtin_network_spec(path.substr(kBuiltin.size())));
  }
  return parse_network_spec(read_text_file(path));
}

Dataset<Real> head_of(const Dataset<Real>& data, std::size_t max_samples) {
  if (max_samples == 0 || max_samples >= data.size()) return data;
  Dataset<Real> sub;
  sub.samples.assign(data.samples.begin(), data.samples.begin() + max_samples);
  sub.labels.assign(data.labels.begin(), data.labels.begin() + max_samples);
  return sub;
}

// Shared manifest of the model-handling subcommands.
struct ModelArgs {
  std::string net;      // spec file or builtin:<name>
  std::string weights;  // optional weights directory
  std::string data;     // optional dataset directory
  std::string config;   // optional mask config file
  std::size_t max_samples = 0;
  std::size_t impact_samples = 512;
  int threads = 1;
};

void add_model(CLI::App* cmd, ModelArgs& m, bool needs_data) {
  cmd->add_option("--net", m.net, "Network spec file, or builtin:{nin,alexnet,vgg16}")
      ->required();
  cmd->add_option("--weights", m.weights,
                  "Weights directory (omitted: seeded random initialization)");
  auto* data = cmd->add_option("--data", m.data, "Dataset directory");
  if (needs_data) data->required();
  cmd->add_option("--config", m.config, "Perforation config file to apply");
  cmd->add_option("--max-samples", m.max_samples, "Evaluate at most this many samples (0 = all)");
  cmd->add_option("--impact-samples", m.impact_samples,
                  "Samples used to average impact fields (0 = all)");
  cmd->add_option("--threads", m.threads, "Worker threads for evaluation");
}

// Builds the network a subcommand operates on: spec -> seeded init ->
// interpolation/storage -> optional stored weights -> optional mask config.
Network<Real> build_network(const ModelArgs& m, const CommonArgs& c,
                            const Dataset<Real>* impact_data) {
  const NetworkSpec spec = load_spec(m.net);
  Network<Real> net(spec, derive_seed(c.seed, "init"), impact_data);
  net.set_interpolation(interp_from_name(c.interp));
  net.set_storage(storage_from_name(c.storage));
  if (!m.weights.empty()) load_weights(m.weights, net);
  if (!m.config.empty()) {
    const std::vector<MaskChoice> choices = parse_mask_config(read_text_file(m.config));
    apply_mask_config(net, choices, impact_data, m.impact_samples);
  }
  return net;
}

std::string num_str(double v) {
  std::ostringstream s;
  s << std::setprecision(12) << v;
  return s.str();
}

// --- mask ---------------------------------------------------------------

struct MaskArgs {
  std::string grid;
  std::string type = "uniform";
  std::string rate;
  std::size_t count = 0;
  std::string out;
  std::string field;
  int pool_size = 0;
  int pool_stride = 0;
  int pool_pad = 0;
  bool pool_floor = false;
  CLI::Option* rate_opt = nullptr;
  CLI::Option* count_opt = nullptr;
};

int cmd_mask(const MaskArgs& a, const CommonArgs& c, std::ostream& out) {
  const auto [gx, gy] = parse_extent_pair(a.grid, "--grid");
  const std::size_t total = static_cast<std::size_t>(gx) * gy;
  const bool has_rate = a.rate_opt->count() > 0;
  const bool has_count = a.count_opt->count() > 0;
  if (has_rate == has_count) {
    throw std::invalid_argument("give exactly one of --rate and --count");
  }
  std::size_t n = a.count;
  if (has_rate) {
    const Rational r = parse_rate(a.rate);
    n = exact_count_for_rate(total, r.num, r.den);
  }
  const MaskType type = mask_type_from_name(a.type);
  const std::uint64_t seed = derive_seed(c.seed, "mask");

  PerforationMask mask;
  switch (type) {
    case MaskType::uniform:
      mask = uniform_mask(gx, gy, n, seed);
      break;
    case MaskType::grid:
      mask = grid_mask(gx, gy, n, seed);
      break;
    case MaskType::structure: {
      if (a.pool_size < 1) {
        throw std::invalid_argument("structure masks need the consumer pooling: --pool-size");
      }
      PoolGeometry pool;
      pool.size = a.pool_size;
      pool.stride = a.pool_stride > 0 ? a.pool_stride : a.pool_size;
      pool.pad = a.pool_pad;
      pool.ceil_mode = !a.pool_floor;
      mask = top_n_by_weight(pooling_usage_counts(gx, gy, pool), n, seed);
      mask.type = MaskType::structure;
      break;
    }
    case MaskType::impact: {
      if (a.field.empty()) {
        throw std::invalid_argument("impact masks need --field (an XxYx1 tensor of weights)");
      }
      const Tensor3<double> f = load_tensor<double>(a.field);
      if (f.height() != gx || f.width() != gy || f.channels() != 1) {
        throw std::invalid_argument("--field must be a " + std::to_string(gx) + "x" +
                                    std::to_string(gy) + "x1 tensor, got " +
                                    std::to_string(f.height()) + "x" + std::to_string(f.width()) +
                                    "x" + std::to_string(f.channels()));
      }
      WeightField w;
      w.grid_x = gx;
      w.grid_y = gy;
      w.w = f.values();
      mask = top_n_by_weight(w, n, seed);
      break;
    }
  }

  save_mask(a.out, mask);
  const Rational achieved(static_cast<long long>(total - mask.size()),
                          static_cast<long long>(total));
  out << "wrote " << a.out << ": " << mask_type_name(type) << " mask keeping " << mask.size()
      << " of " << total << " positions, r = " << achieved.str() << " (" << achieved.value()
      << ")\n";
  return 0;
}

// --- eval ----------------------------------------------------------------

// One curve point of the eval CSV. Columns (fixed order):
//   mask,rate,loss,error,samples,mults,baseline_mults,theoretical_speedup,memory_ratio
std::string eval_row(const std::string& mask, const std::string& rate, const EvalMetrics& m,
                     const CostReport& c) {
  std::ostringstream s;
  s << mask << ',' << rate << ',' << num_str(m.mean_loss) << ',' << num_str(m.error_rate) << ','
    << m.samples << ',' << c.total_mults << ',' << c.baseline_mults << ','
    << num_str(c.theoretical_speedup) << ',' << num_str(c.memory_ratio) << '\n';
  return s.str();
}

constexpr const char* kEvalHeader =
    "mask,rate,loss,error,samples,mults,baseline_mults,theoretical_speedup,memory_ratio\n";

struct EvalArgs {
  ModelArgs model;
  std::string out;
  int sweep_layer = 0;
  std::string ladder;
};

std::vector<Rational> parse_ladder_list(const std::string& text) {
  std::vector<Rational> ladder;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    if (!item.empty()) ladder.push_back(parse_rate(item));
  }
  if (ladder.empty()) throw std::invalid_argument("--ladder: no rates given");
  return ladder;
}

int cmd_eval(const EvalArgs& a, const CommonArgs& c, std::ostream& out, std::ostream& err) {
  const Dataset<Real> data = load_dataset<Real>(a.model.data);
  const Network<Real> net = build_network(a.model, c, &data);

  std::string csv = kEvalHeader;
  if (a.sweep_layer == 0) {
    const EvalMetrics m = net.evaluate(data, a.model.max_samples, a.model.threads);
    csv += eval_row(a.model.config.empty() ? "none" : "config", "-", m, account(net));
  } else {
    // One curve per mask type over the rate ladder, each point a fresh
    // single-layer perforation of the base network.
    const std::vector<int> perforable = net.perforable_layers();
    if (std::find(perforable.begin(), perforable.end(), a.sweep_layer) == perforable.end()) {
      throw std::invalid_argument("--sweep-layer " + std::to_string(a.sweep_layer) +
                                  " is not a perforable conv layer");
    }
    const std::vector<Rational> ladder =
        a.ladder.empty() ? default_rate_ladder() : parse_ladder_list(a.ladder);
    const std::uint64_t mask_seed =
        derive_seed(c.seed, "mask.layer" + std::to_string(a.sweep_layer));
    for (const MaskType type :
         {MaskType::uniform, MaskType::grid, MaskType::structure, MaskType::impact}) {
      for (const Rational& rate : ladder) {
        Network<Real> point = net;
        point.clear_all_perforation();
        try {
          point.set_perforation(a.sweep_layer, type, rate, mask_seed, &data,
                                a.model.impact_samples);
        } catch (const std::invalid_argument& e) {
          err << "note: skipping " << mask_type_name(type) << " curve: " << e.what() << "\n";
          break;
        }
        const EvalMetrics m = point.evaluate(data, a.model.max_samples, a.model.threads);
        csv += eval_row(mask_type_name(type), rate.str(), m, account(point));
      }
    }
  }

  if (a.out.empty()) {
    out << csv;
  } else {
    write_text_file(a.out, csv);
    out << "wrote " << a.out << "\n";
  }
  return 0;
}

// --- search ----------------------------------------------------------------

struct SearchArgs {
  ModelArgs model;
  double target = 2.0;
  std::string cost_model = "mults";
  std::string mask_type = "grid";
  std::string ladder;
  std::string out_config;
  std::string out_trace;
};

int cmd_search(const SearchArgs& a, const CommonArgs& c, std::ostream& out) {
  const Dataset<Real> data = load_dataset<Real>(a.model.data);
  const Network<Real> net = build_network(a.model, c, &data);
  const Dataset<Real> subset = head_of(data, a.model.max_samples);

  GreedyOptions options;
  options.target_speedup = a.target;
  options.type = mask_type_from_name(a.mask_type);
  options.seed = derive_seed(c.seed, "search");
  options.cost_model = cost_model_from_name(a.cost_model);
  if (!a.ladder.empty()) options.ladder = parse_ladder_list(a.ladder);
  options.impact_samples = a.model.impact_samples;
  options.eval_threads = a.model.threads;

  const GreedyResult result = greedy_configure(net, subset, options);
  const CandidateEvaluation& ev = result.evaluation;

  out << "baseline: t = " << num_str(ev.t0) << ", e = " << num_str(ev.e0) << "\n";
  out << "final:    t = " << num_str(ev.t) << ", e = " << num_str(ev.e) << ", speedup = "
      << num_str(ev.speedup()) << "x in " << result.trace.size() << " steps\n";
  if (result.reached_target) {
    out << "target " << a.target << "x reached\n";
  } else {
    out << "rate ladder exhausted before the " << a.target << "x target; best speedup "
        << num_str(ev.speedup()) << "x\n";
  }

  const std::string config_text = serialize_mask_config(result.config.choices());
  if (a.out_config.empty()) {
    out << "# config\n" << config_text;
  } else {
    write_text_file(a.out_config, config_text);
    out << "wrote " << a.out_config << "\n";
  }
  const std::string trace_text = trace_csv(result.trace);
  if (a.out_trace.empty()) {
    out << "# trace\n" << trace_text;
  } else {
    write_text_file(a.out_trace, trace_text);
    out << "wrote " << a.out_trace << "\n";
  }
  return 0;
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  ModelArgs model;
  std::string test_data;
  int epochs = 0;
  double lr = 0.01;
  double momentum = 0.9;
  int batch = 64;
  double weight_decay = 0.0;
  std::string out_weights;
  std::string log;
};

int cmd_train(const TrainArgs& a, const CommonArgs& c, std::ostream& out) {
  const Dataset<Real> data = load_dataset<Real>(a.model.data);
  Network<Real> net = build_network(a.model, c, &data);

  std::string log_csv = "epoch,mean_loss\n";
  TrainConfig config;
  config.epochs = a.epochs;
  config.learning_rate = a.lr;
  config.momentum = a.momentum;
  config.batch_size = a.batch;
  config.weight_decay = a.weight_decay;
  config.seed = derive_seed(c.seed, "train");
  config.threads = a.model.threads;
  config.on_epoch = [&](const EpochLog& log) {
    log_csv += std::to_string(log.epoch) + "," + num_str(log.mean_loss) + "\n";
    out << "epoch " << log.epoch << ": mean loss " << num_str(log.mean_loss) << "\n";
  };
  net.sgd_finetune(data, config);

  save_weights(a.out_weights, net);
  out << "wrote " << a.out_weights << "\n";
  if (!a.log.empty()) {
    write_text_file(a.log, log_csv);
    out << "wrote " << a.log << "\n";
  }

  const Dataset<Real> test = a.test_data.empty() ? data : load_dataset<Real>(a.test_data);
  const EvalMetrics m = net.evaluate(test, a.model.max_samples, a.model.threads);
  out << (a.test_data.empty() ? "train" : "test") << " split: mean loss " << num_str(m.mean_loss)
      << ", error " << num_str(m.error_rate) << " over " << m.samples << " samples\n";
  return 0;
}

// --- bench -----------------------------------------------------------------

struct BenchArgs {
  ModelArgs model;
  std::string out;
  bool time = false;
  int reps = 5;
  int warmup = 1;
  std::size_t element_bytes = sizeof(Real);
};

int cmd_bench(const BenchArgs& a, const CommonArgs& c, std::ostream& out) {
  CostReport report;
  if (!a.time) {
    // Static accounting works symbolically: a mask config becomes perforation
    // attachments on the spec, so no weights are ever materialized.
    NetworkSpec spec = load_spec(a.model.net);
    if (!a.model.config.empty()) {
      for (const MaskChoice& choice : parse_mask_config(read_text_file(a.model.config))) {
        if (choice.layer < 1 || choice.layer > static_cast<int>(spec.layers.size())) {
          throw std::invalid_argument("mask config layer " + std::to_string(choice.layer) +
                                      " outside 1.." + std::to_string(spec.layers.size()));
        }
        PerfAttach& perf = spec.layers[static_cast<std::size_t>(choice.layer) - 1].perf;
        perf.enabled = true;
        perf.type = choice.type;
        perf.rate = choice.rate;
        perf.seed = choice.seed;
      }
    }
    report = account(spec, a.element_bytes, storage_from_name(c.storage));
  } else {
    std::optional<Dataset<Real>> data;
    if (!a.model.data.empty()) data = load_dataset<Real>(a.model.data);
    const Network<Real> net = build_network(a.model, c, data ? &*data : nullptr);
    Tensor3<Real> input(net.input_shape().x, net.input_shape().y, net.input_shape().c);
    Rng rng(derive_seed(c.seed, "bench.input"));
    for (Real& v : input.values()) v = static_cast<Real>(rng.normal());
    report = time_forward(net, input, a.reps, a.warmup, a.model.threads);
  }

  out << cost_report_table(report);
  if (!a.out.empty()) {
    write_text_file(a.out, cost_report_csv(report));
    out << "wrote " << a.out << "\n";
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"perforated-convolution CNN toolkit", "perfcnn"};
  app.require_subcommand(1);

  CommonArgs common;

  MaskArgs mask;
  CLI::App* mask_cmd = app.add_subcommand("mask", "Generate a perforation mask file");
  mask_cmd->add_option("--grid", mask.grid, "Output grid extent, e.g. 16x16")->required();
  mask_cmd->add_option("--type", mask.type, "Mask type: uniform, grid, structure or impact");
  mask.rate_opt = mask_cmd->add_option("--rate", mask.rate, "Perforation rate as a fraction, e.g. 3/4");
  mask.count_opt = mask_cmd->add_option("--count", mask.count, "Number of positions to keep exact");
  mask_cmd->add_option("--out", mask.out, "Mask file to write")->required();
  mask_cmd->add_option("--field", mask.field, "Impact weights, an XxYx1 tensor file");
  mask_cmd->add_option("--pool-size", mask.pool_size, "Consumer pooling window (structure masks)");
  mask_cmd->add_option("--pool-stride", mask.pool_stride, "Consumer pooling stride (default: window)");
  mask_cmd->add_option("--pool-pad", mask.pool_pad, "Consumer pooling padding");
  mask_cmd->add_flag("--pool-floor", mask.pool_floor, "Pooling rounds its extent down, not up");
  add_common(mask_cmd, common);

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a network on a dataset");
  add_model(eval_cmd, eval.model, /*needs_data=*/true);
  eval_cmd->add_option("--out", eval.out, "Metrics CSV path (omitted: print to stdout)");
  eval_cmd->add_option("--sweep-layer", eval.sweep_layer,
                       "Sweep every mask type over the rate ladder on this conv layer");
  eval_cmd->add_option("--ladder", eval.ladder, "Comma-separated sweep rates, e.g. 1/2,2/3,3/4");
  add_common(eval_cmd, common);

  SearchArgs search;
  CLI::App* search_cmd =
      app.add_subcommand("search", "Greedy per-layer perforation rate search");
  add_model(search_cmd, search.model, /*needs_data=*/true);
  search_cmd->add_option("--target", search.target, "Target theoretical speedup (> 1)");
  search_cmd->add_option("--cost-model", search.cost_model, "Cost model: mults or time");
  search_cmd->add_option("--mask-type", search.mask_type, "Mask type the search installs");
  search_cmd->add_option("--ladder", search.ladder, "Comma-separated rate ladder");
  search_cmd->add_option("--out-config", search.out_config, "Winning mask config path");
  search_cmd->add_option("--out-trace", search.out_trace, "Accepted-steps trace CSV path");
  add_common(search_cmd, common);

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train or fine-tune network weights");
  add_model(train_cmd, train.model, /*needs_data=*/true);
  train_cmd->add_option("--test-data", train.test_data, "Held-out dataset for the final report");
  train_cmd->add_option("--epochs", train.epochs, "SGD epochs (0 leaves weights untouched)")
      ->required();
  train_cmd->add_option("--lr", train.lr, "Learning rate");
  train_cmd->add_option("--momentum", train.momentum, "Momentum in [0, 1)");
  train_cmd->add_option("--batch", train.batch, "Mini-batch size");
  train_cmd->add_option("--weight-decay", train.weight_decay, "L2 weight decay");
  train_cmd->add_option("--out-weights", train.out_weights, "Directory for the trained weights")
      ->required();
  train_cmd->add_option("--log", train.log, "Per-epoch loss CSV path");
  add_common(train_cmd, common);

  BenchArgs bench;
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "Cost accounting and forward-pass timing");
  add_model(bench_cmd, bench.model, /*needs_data=*/false);
  bench_cmd->add_option("--out", bench.out, "Cost report CSV path");
  bench_cmd->add_flag("--time", bench.time, "Also measure wall-clock forward passes");
  bench_cmd->add_option("--reps", bench.reps, "Timed repetitions (>= 3)");
  bench_cmd->add_option("--warmup", bench.warmup, "Untimed warmup repetitions");
  bench_cmd->add_option("--element-bytes", bench.element_bytes,
                        "Bytes per activation scalar for static accounting");
  add_common(bench_cmd, common);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    // CLI11 maps --help to a "parse error" with exit code 0.
    if (e.get_exit_code() == 0) {
      return app.exit(e, out, err);
    }
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (mask_cmd->parsed()) return cmd_mask(mask, common, out);
    if (eval_cmd->parsed()) return cmd_eval(eval, common, out, err);
    if (search_cmd->parsed()) return cmd_search(search, common, out);
    if (train_cmd->parsed()) return cmd_train(train, common, out);
    if (bench_cmd->parsed()) return cmd_bench(bench, common, out);
    err << "perfcnn: no subcommand\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "perfcnn: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    err << "perfcnn: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    err << "perfcnn: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "perfcnn: internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace perfcnn
