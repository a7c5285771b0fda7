// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cli.h"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>

#include "json.hpp"
#include "walkex/bench.h"
#include "walkex/error.h"
#include "walkex/gradcheck.h"

namespace walkex::cli {

namespace fs = std::filesystem;

namespace {

// A mistake in the invocation rather than a failure while running.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoadedData {
  GraphDataset dataset;
  std::vector<MotifAnnotation> motifs;  // generated data only
};

LoadedData load_data(const Options& opts) {
  std::string spec = opts.dataset;
  if (spec.empty() && opts.generate > 0) spec = "ba2motifs.gen";
  if (spec.empty()) throw UsageError("no dataset: pass --dataset PREFIX or --generate COUNT");
  if (spec == "ba2motifs.gen") {
    const int count = opts.generate > 0 ? opts.generate : 200;
    if (count % 2 != 0) throw UsageError("--generate needs an even graph count");
    auto gen = generate_ba2motifs(count, 20, 1, opts.data_seed);
    return {std::move(gen.dataset), std::move(gen.motifs)};
  }
  const fs::path prefix(spec);
  const fs::path dir = prefix.has_parent_path() ? prefix.parent_path() : fs::path(".");
  const std::string name = prefix.filename().string();
  if (!fs::exists(dir / (name + "_A.txt"))) {
    throw UsageError("dataset not found: " + (dir / (name + "_A.txt")).string());
  }
  LoadedData data{parse_tudataset(dir, name), {}};
  const fs::path motif_file = dir / (name + "_motif_nodes.txt");
  if (fs::exists(motif_file)) {
    const auto nodes = read_motif_nodes(motif_file);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      data.motifs.push_back({nodes[i], static_cast<MotifKind>(data.dataset.labels.at(i))});
    }
  }
  return data;
}

TrainConfig checked_config(const Options& opts) {
  try {
    return train_config(opts);
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

int cmd_train(const CLI::App& app, const Options& opts, std::ostream& out) {
  const TrainConfig config = checked_config(opts);
  if (opts.folds < 2) throw UsageError("--folds must be >= 2");
  if (opts.jobs < 1) throw UsageError("--jobs must be >= 1");
  const LoadedData data = load_data(opts);

  const fs::path run(opts.out);
  fs::create_directories(run);
  write_text(run / "config.toml", app.config_to_str(true, false));

  std::ofstream metrics(run / "metrics.jsonl", std::ios::binary);
  if (!metrics) throw std::runtime_error("cannot write " + (run / "metrics.jsonl").string());
  const auto start = std::chrono::steady_clock::now();
  CvResult cv;
  try {
    cv = evaluate_cv(data.dataset, config, opts.folds, opts.jobs,
                     [&](const EpochMetrics& m) { metrics << m.to_json() << '\n' << std::flush; });
  } catch (const ConstraintError& e) {
    throw UsageError(e.what());  // e.g. a class smaller than the fold count
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  for (int fold = 0; fold < opts.folds; ++fold) {
    const fs::path dir = run / std::to_string(fold);
    fs::create_directories(dir);
    cv.best_models[static_cast<std::size_t>(fold)].store.save(dir / "best.ckpt");
  }
  nlohmann::json summary{{"dataset", data.dataset.name},
                         {"graphs", data.dataset.size()},
                         {"mdp", to_string(config.kind)},
                         {"max_steps", config.max_steps},
                         {"samples", config.samples},
                         {"epochs", config.epochs},
                         {"folds", opts.folds},
                         {"fold_best_val_acc", cv.fold_best},
                         {"mean_val_acc", cv.mean},
                         {"std_val_acc", cv.stddev},
                         {"wall_seconds", seconds}};
  write_text(run / "summary.json", summary.dump(2) + "\n");
  out << summary.dump() << '\n';
  return kOk;
}

int cmd_extract(const Options& opts, std::ostream& out) {
  const TrainConfig config = checked_config(opts);
  if (opts.checkpoint.empty()) throw UsageError("--checkpoint is required");
  const LoadedData data = load_data(opts);
  for (std::size_t idx : opts.graphs) {
    if (idx >= data.dataset.size()) {
      throw UsageError("graph index " + std::to_string(idx) + " out of range (dataset has " +
                       std::to_string(data.dataset.size()) + " graphs)");
    }
  }
  Model model = Model::layout(config, data.dataset.feature_dim(), data.dataset.num_classes());
  ParameterStore loaded = ParameterStore::load(opts.checkpoint);
  std::vector<std::string> expected = model.sampling.trainable();
  for (const auto& group : {model.sampling.agent.target.parameter_names(),
                            model.output.trainable()}) {
    expected.insert(expected.end(), group.begin(), group.end());
  }
  for (const auto& name : expected) {
    if (!loaded.contains(name)) {
      throw std::runtime_error("checkpoint " + opts.checkpoint + " lacks parameter " + name +
                               "; do the model flags match the training run?");
    }
  }
  model.store = std::move(loaded);

  const fs::path dir(opts.out);
  fs::create_directories(dir);
  std::ofstream records(dir / "extract.jsonl", std::ios::binary);
  if (!records) throw std::runtime_error("cannot write " + (dir / "extract.jsonl").string());
  for (std::size_t idx : opts.graphs) {
    const auto inf =
        infer(model, data.dataset.graphs[idx], data.dataset.features[idx], config.samples, idx);
    const std::string stem = "graph_" + std::to_string(idx);
    write_text(dir / (stem + ".dot"),
               to_dot(data.dataset.graphs[idx], inf.finals.front(), stem));
    for (std::size_t j = 0; j < inf.finals.size(); ++j) {
      records << to_json_record(inf.finals[j], inf.trajectories[j].q_values) << '\n';
    }
    out << stem << ": predicted class " << data.dataset.class_values[inf.predicted]
        << ", label " << data.dataset.class_values[data.dataset.labels[idx]] << '\n';
  }
  return kOk;
}

int cmd_bench_actions(const Options& opts, std::ostream& out) {
  std::vector<GraphFamily> families;
  try {
    for (const auto& f : opts.families) families.push_back(parse_family(f));
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
  if (opts.L < 1 || opts.N < 1 || opts.bench_seeds < 1) {
    throw UsageError("--L, --N and --bench-seeds must be >= 1");
  }
  std::vector<BenchRow> rows;
  for (GraphFamily family : families) {
    BenchSpec spec;
    spec.family = family;
    spec.sizes.assign(opts.sizes.begin(), opts.sizes.end());
    spec.walk_steps = opts.L;
    spec.subgraph_steps = opts.N;
    spec.seeds.clear();
    for (int s = 0; s < opts.bench_seeds; ++s) spec.seeds.push_back(opts.seed + s);
    auto part = bench_actions(spec);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const fs::path dir(opts.out);
  fs::create_directories(dir);
  write_text(dir / "bench_actions.csv", to_csv(rows));

  for (MdpKind kind : {MdpKind::kWalkExploration, MdpKind::kSubgraphGeneration}) {
    const auto curve = mean_curve(rows, kind);
    std::vector<double> xs(curve.size());
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i + 1);
    const LineFit fit = fit_line(xs, curve);
    out << to_string(kind) << ": slope " << fit.slope << " r2 " << fit.r2
        << " increasing_rate " << (strictly_increasing(incremental_rate(curve)) ? "yes" : "no")
        << '\n';
  }
  out << "wrote " << (dir / "bench_actions.csv").string() << " (" << rows.size() << " rows)\n";
  return kOk;
}

int cmd_gen_data(const Options& opts, std::ostream& out) {
  if (opts.n < 2 || opts.n % 2 != 0) throw UsageError("--n must be a positive even number");
  if (opts.base_nodes < 5 || opts.attach < 1) {
    throw UsageError("--base-nodes must be >= 5 and --attach >= 1");
  }
  auto gen = generate_ba2motifs(opts.n, opts.base_nodes, opts.attach, opts.seed);
  gen.dataset.name = opts.name;
  std::error_code ec;
  fs::create_directories(opts.out, ec);
  if (ec) throw std::runtime_error("cannot create " + opts.out + ": " + ec.message());
  write_tudataset(gen.dataset, opts.out, opts.name, &gen.motifs);
  out << "wrote " << opts.n << " graphs to " << (fs::path(opts.out) / opts.name).string() << '\n';
  return kOk;
}

int cmd_grad_check(const Options& opts, std::ostream& out, std::ostream& err) {
  if (opts.check_seeds < 1) throw UsageError("--seeds must be >= 1");
  std::optional<std::string> corrupt;
  if (!opts.corrupt_block.empty()) corrupt = opts.corrupt_block;
  const GradCheckReport report = run_gradient_checks(opts.check_seeds, 1e-4, 1e-4, corrupt);
  for (const auto& b : report.blocks) {
    out << b.block << " max_rel_err=" << b.max_rel_error << " redrawn=" << b.redrawn << '\n';
  }
  const BlockCheck& worst = report.worst();
  out << "worst: " << worst.block << " " << worst.max_rel_error << '\n';
  if (!report.passed()) {
    err << "gradient check failed in block " << worst.block << '\n';
    return kRuntimeError;
  }
  return kOk;
}

}  // namespace

TrainConfig train_config(const Options& opts) {
  TrainConfig c;
  c.kind = parse_mdp_kind(opts.mdp);
  c.max_steps = c.kind == MdpKind::kWalkExploration ? opts.L : opts.N;
  c.samples = opts.K;
  c.epochs = opts.epochs;
  c.batch_size = opts.batch;
  c.gamma = opts.gamma;
  c.beta = opts.beta;
  c.eps_start = opts.eps_start;
  c.eps_end = opts.eps_end;
  c.lr_sampling = opts.lr_sampling;
  c.lr_output = opts.lr_output;
  c.seed = opts.seed;
  c.input_scale = opts.input_scale;
  if (opts.pooling == "mean") {
    c.pooling = Pooling::kMean;
  } else if (opts.pooling == "max") {
    c.pooling = Pooling::kMax;
  } else {
    throw InputError("unknown pooling '" + opts.pooling + "' (expected mean or max)");
  }
  c.validate();
  return c;
}

void configure(CLI::App& app, Options& o) {
  app.description("Graph classification with learned substructure sampling.");
  app.set_config("--config", "", "TOML config file; flags override its values");
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--dataset", o.dataset, "TUDataset prefix DIR/NAME, or ba2motifs.gen");
  app.add_option("--generate", o.generate, "generate this many BA-2motifs graphs in memory");
  app.add_option("--data-seed", o.data_seed, "seed of the in-memory generator");
  app.add_option("--mdp", o.mdp, "walk | subgraph")->check(CLI::IsMember({"walk", "subgraph"}));
  app.add_option("--L", o.L, "walk length");
  app.add_option("--N", o.N, "subgraph size");
  app.add_option("--K", o.K, "samples per graph");
  app.add_option("--epochs", o.epochs);
  app.add_option("--batch", o.batch);
  app.add_option("--folds", o.folds);
  app.add_option("--seed", o.seed);
  app.add_option("--gamma", o.gamma);
  app.add_option("--beta", o.beta);
  app.add_option("--eps-start", o.eps_start);
  app.add_option("--eps-end", o.eps_end);
  app.add_option("--lr-sampling", o.lr_sampling);
  app.add_option("--lr-output", o.lr_output);
  app.add_option("--input-scale", o.input_scale, "multiplier on node features");
  app.add_option("--pooling", o.pooling, "mean | max");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--jobs", o.jobs, "folds trained concurrently");

  app.add_subcommand("train", "k-fold cross-validation with checkpoints and metrics");

  auto* extract = app.add_subcommand("extract", "write DOT and JSON for extracted walks");
  extract->add_option("--checkpoint", o.checkpoint)->required();
  extract->add_option("--graphs", o.graphs, "graph indices")->delimiter(',');

  auto* bench = app.add_subcommand("bench-actions", "count candidate actions per MDP");
  bench->add_option("--family", o.families, "path | cycle | tree | ba | complete")
      ->delimiter(',');
  bench->add_option("--sizes", o.sizes)->delimiter(',');
  bench->add_option("--bench-seeds", o.bench_seeds, "instances per size");

  auto* gen = app.add_subcommand("gen-data", "write a BA-2motifs TUDataset");
  gen->add_option("--n", o.n, "graph count (even)");
  gen->add_option("--base-nodes", o.base_nodes);
  gen->add_option("--attach", o.attach);
  gen->add_option("--name", o.name);

  auto* grad = app.add_subcommand("grad-check", "finite-difference gradient checks");
  grad->add_option("--seeds", o.check_seeds);
  grad->add_option("--corrupt-block", o.corrupt_block)->group("");
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app("walkex");
  Options opts;
  configure(app, opts);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (app.got_subcommand("train")) return cmd_train(app, opts, out);
    if (app.got_subcommand("extract")) return cmd_extract(opts, out);
    if (app.got_subcommand("bench-actions")) return cmd_bench_actions(opts, out);
    if (app.got_subcommand("gen-data")) return cmd_gen_data(opts, out);
    if (app.got_subcommand("grad-check")) return cmd_grad_check(opts, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace walkex::cli
