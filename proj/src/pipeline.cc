// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkex/pipeline.h"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <thread>

#include "json.hpp"
#include "walkex/error.h"

namespace walkex {

void TrainConfig::validate() const {
  auto positive = [](bool ok, const char* what) {
    if (!ok) throw InputError(std::string("TrainConfig: ") + what);
  };
  positive(max_steps >= 1, "max_steps (L/N) must be >= 1");
  positive(samples >= 1, "samples (K) must be >= 1");
  positive(epochs >= 0, "epochs must be >= 0");
  positive(batch_size >= 1, "batch size must be >= 1");
  positive(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  positive(beta >= 0.0 && beta <= 1.0, "beta must lie in [0, 1]");
  positive(eps_start >= 0.0 && eps_start <= 1.0 && eps_end >= 0.0 && eps_end <= 1.0,
           "epsilon endpoints must lie in [0, 1]");
  positive(lr_sampling > 0.0 && lr_output > 0.0, "learning rates must be positive");
  positive(mpnn_layers >= 1 && hidden_dim > 0 && embed_dim > 0 && q_hidden > 0,
           "network sizes must be positive");
  positive(input_scale > 0.0 && std::isfinite(input_scale), "input_scale must be positive");
}

namespace {

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

std::vector<std::string> SamplingModel::trainable() const {
  return concat(graphlet.parameter_names(), agent.policy.parameter_names());
}

std::vector<std::string> OutputModel::trainable() const {
  return concat(encoder.parameter_names(), decoder.parameter_names());
}

Model Model::layout(const TrainConfig& config, std::size_t feature_dim, int num_classes) {
  config.validate();
  if (num_classes < 2) throw InputError("Model: need at least two classes");
  const MpnnSpec spec{config.mpnn_layers, feature_dim, config.hidden_dim, config.embed_dim, 0.0,
                      config.input_scale};
  const EnvConfig env = config.env();
  const std::size_t state_dim = state_encoding_dim(env, config.embed_dim);

  Model m;
  m.sampling.graphlet = Mpnn("theta", spec);
  m.sampling.agent = AgentPair(state_dim, config.embed_dim, config.q_hidden);
  m.sampling.env = env;
  m.sampling.epsilon = {config.eps_start, config.eps_end, config.epochs};
  m.sampling.gamma = config.gamma;
  m.sampling.beta = config.beta;

  m.output.encoder = Mpnn("theta_out", spec);
  m.output.decoder = Mlp("theta_dec", {state_dim, config.hidden_dim,
                                       static_cast<std::size_t>(num_classes)});
  m.output.env = env;
  m.output.pooling = config.pooling;
  m.output.num_classes = num_classes;
  return m;
}

Model Model::create(const TrainConfig& config, std::size_t feature_dim, int num_classes) {
  Model m = layout(config, feature_dim, num_classes);
  std::mt19937_64 rng(config.seed);
  m.sampling.graphlet.init(m.store, rng);
  m.sampling.agent.init(m.store, rng);
  m.output.encoder.init(m.store, rng);
  m.output.decoder.init(m.store, rng);
  return m;
}

Var output_forward(Tape& t, ParameterStore& store, const OutputModel& om, const Graph& g,
                   const NodeFeatureMatrix& x, std::span<const EnvState> finals) {
  if (finals.empty()) throw ContractError("output_forward: need at least one final state");
  for (const auto& s : finals) {
    for (NodeId v : s.nodes()) {
      if (v < 0 || v >= g.node_count()) {
        throw ContractError("output_forward: state does not belong to this graph");
      }
    }
  }
  Var z = om.encoder.forward(t, store, g, x.values());
  if (om.pooling == Pooling::kMean) {
    // The mean of linear encodings is one sparse row.
    SlotRows rows(state_slots(om.env));
    const double w = 1.0 / static_cast<double>(finals.size());
    for (const auto& s : finals) append_state_terms(s, om.env, w, rows);
    rows.end_row();
    return om.decoder.forward_slots(t, store, z, rows);
  }
  std::vector<Var> encodings;
  for (const auto& s : finals) encodings.push_back(encode_state(t, z, s, om.env));
  Var stacked = ops::vstack(t, encodings);
  return om.decoder.forward(t, store, ops::max_rows(t, stacked));
}

RewardEvaluator make_reward_evaluator(ParameterStore& store, const OutputModel& om,
                                      const Graph& g, const NodeFeatureMatrix& x, int label) {
  Matrix z;
  {
    Tape t(false);
    z = t.value(om.encoder.forward(t, store, g, x.values()));
  }
  const EnvConfig env = om.env;
  auto decoder = std::make_shared<SlotMlp>(store, om.decoder, std::move(z), state_slots(env));
  return [decoder, env, label](const EnvState& s) {
    SlotRows rows(state_slots(env));
    append_state_terms(s, env, 1.0, rows);
    rows.end_row();
    const Matrix logits = decoder->forward(rows);
    Tape t(false);
    return t.value(ops::softmax_cross_entropy(t, t.constant(logits), label))[0];
  };
}

Matrix graphlet_embeddings(ParameterStore& store, const SamplingModel& sm, const Graph& g,
                           const NodeFeatureMatrix& x) {
  Tape t(false);
  return t.value(sm.graphlet.forward(t, store, g, x.values()));
}

namespace {

int argmax_class(const Matrix& logits) {
  int best = 0;
  for (std::size_t c = 1; c < logits.size(); ++c) {
    if (logits[c] > logits[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

}  // namespace

StageResult train_sampling_stage(Model& model, const GraphDataset& data,
                                 std::span<const std::size_t> batch, double epsilon, int samples,
                                 double lr, std::mt19937_64& rng) {
  if (batch.empty()) throw InputError("train_sampling_stage: empty batch");
  const SamplingModel& sm = model.sampling;
  Tape t;
  std::map<std::size_t, Var> z_vars;
  std::vector<Trajectory> trajectories;
  std::vector<double> targets;
  for (std::size_t idx : batch) {
    const Graph& g = data.graphs[idx];
    Var z = sm.graphlet.forward(t, model.store, g, data.features[idx].values());
    z_vars[idx] = z;
    const Matrix z_value = t.value(z);
    const RewardEvaluator evaluator =
        make_reward_evaluator(model.store, model.output, g, data.features[idx], data.labels[idx]);
    RolloutOptions opts{RolloutMode::kTrain, samples, epsilon, sm.gamma, &evaluator};
    auto result = rollout(g, idx, model.store, sm.agent, z_value, sm.env, opts, rng, &targets);
    for (auto& traj : result.trajectories) trajectories.push_back(std::move(traj));
  }
  Var loss = trajectory_loss(t, model.store, sm.agent, trajectories, targets,
                             [&](std::size_t i) { return z_vars.at(i); }, sm.env);
  backward(t, loss, model.store);
  const auto names = sm.trainable();
  adam_step(model.store, names, lr);
  soft_update(model.store, sm.agent, sm.beta);
  return {t.value(loss)[0], 0};
}

StageResult train_output_stage(Model& model, const GraphDataset& data,
                               std::span<const std::size_t> batch, int samples, double lr) {
  if (batch.empty()) throw InputError("train_output_stage: empty batch");
  const SamplingModel& sm = model.sampling;
  Tape t;
  std::vector<Var> losses;
  StageResult result;
  std::mt19937_64 unused_rng(0);
  for (std::size_t idx : batch) {
    const Graph& g = data.graphs[idx];
    const Matrix z = graphlet_embeddings(model.store, sm, g, data.features[idx]);
    RolloutOptions opts{RolloutMode::kGreedy, samples, 0.0, sm.gamma, nullptr};
    auto ro = rollout(g, idx, model.store, sm.agent, z, sm.env, opts, unused_rng);
    Var logits = output_forward(t, model.store, model.output, g, data.features[idx], ro.finals);
    if (argmax_class(t.value(logits)) == data.labels[idx]) ++result.correct;
    losses.push_back(ops::softmax_cross_entropy(t, logits, data.labels[idx]));
  }
  Var loss = ops::scale(t, ops::sum(t, ops::vstack(t, losses)),
                        1.0 / static_cast<double>(batch.size()));
  backward(t, loss, model.store);
  const auto names = model.output.trainable();
  adam_step(model.store, names, lr);
  result.loss = t.value(loss)[0];
  return result;
}

std::string EpochMetrics::to_json() const {
  nlohmann::json j{{"epoch", epoch},
                   {"fold", fold},
                   {"sampling_loss", sampling_loss},
                   {"output_loss", output_loss},
                   {"train_acc", train_acc},
                   {"val_acc", val_acc},
                   {"val_loss", val_loss},
                   {"epsilon", epsilon}};
  return j.dump();
}

Inference infer(Model& model, const Graph& g, const NodeFeatureMatrix& x, int samples,
                std::size_t graph_index) {
  if (g.node_count() == 0) throw InputError("infer: graph has no nodes");
  const Matrix z = graphlet_embeddings(model.store, model.sampling, g, x);
  std::mt19937_64 unused_rng(0);
  RolloutOptions opts{RolloutMode::kGreedy, samples, 0.0, model.sampling.gamma, nullptr};
  auto ro = rollout(g, graph_index, model.store, model.sampling.agent, z, model.sampling.env,
                    opts, unused_rng);
  Inference out;
  Tape t(false);
  out.logits = t.value(output_forward(t, model.store, model.output, g, x, ro.finals));
  out.predicted = argmax_class(out.logits);
  out.finals = std::move(ro.finals);
  out.trajectories = std::move(ro.trajectories);
  return out;
}

double accuracy(Model& model, const GraphDataset& data, std::span<const std::size_t> indices,
                int samples) {
  if (indices.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t idx : indices) {
    if (infer(model, data.graphs[idx], data.features[idx], samples, idx).predicted ==
        data.labels[idx]) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(indices.size());
}

Evaluation evaluate(Model& model, const GraphDataset& data, std::span<const std::size_t> indices,
                    int samples) {
  Evaluation e;
  if (indices.empty()) return e;
  for (std::size_t idx : indices) {
    const auto inf = infer(model, data.graphs[idx], data.features[idx], samples, idx);
    if (inf.predicted == data.labels[idx]) e.accuracy += 1.0;
    const auto& logits = inf.logits.data();
    const double top = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - top);
    e.loss += top + std::log(sum) - inf.logits[static_cast<std::size_t>(data.labels[idx])];
  }
  e.accuracy /= static_cast<double>(indices.size());
  e.loss /= static_cast<double>(indices.size());
  return e;
}

std::uint64_t fold_seed(std::uint64_t seed, int fold) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(fold)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

FoldRun train(const GraphDataset& data, std::span<const std::size_t> train_idx,
              std::span<const std::size_t> val_idx, const TrainConfig& config, int fold,
              const MetricsSink& sink) {
  config.validate();
  if (train_idx.empty()) throw InputError("train: no training graphs");
  const auto start = std::chrono::steady_clock::now();
  TrainConfig local = config;
  local.seed = fold_seed(config.seed, fold);
  FoldRun run{{}, Model::create(local, data.feature_dim(), data.num_classes())};
  Model model = run.model;
  std::mt19937_64 rng(local.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train_idx.begin(), train_idx.end());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double eps = model.sampling.epsilon.at(epoch);
    std::shuffle(order.begin(), order.end(), rng);
    EpochMetrics m;
    m.epoch = epoch;
    m.fold = fold;
    m.epsilon = eps;
    std::size_t correct = 0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::span<const std::size_t> batch(order.data() + begin, end - begin);

      const auto out_before = config.check_isolation ? model.store.fingerprint("theta_") : 0;
      m.sampling_loss +=
          train_sampling_stage(model, data, batch, eps, config.samples, config.lr_sampling, rng).loss;
      if (config.check_isolation && model.store.fingerprint("theta_") != out_before) {
        throw ContractError("sampling stage modified output-model parameters");
      }

      const auto smp_before = config.check_isolation
                                  ? std::array{model.store.fingerprint("theta/"),
                                               model.store.fingerprint("phi/"),
                                               model.store.fingerprint("phi_target/")}
                                  : std::array<std::uint64_t, 3>{};
      auto out = train_output_stage(model, data, batch, config.samples, config.lr_output);
      if (config.check_isolation &&
          smp_before != std::array{model.store.fingerprint("theta/"),
                                   model.store.fingerprint("phi/"),
                                   model.store.fingerprint("phi_target/")}) {
        throw ContractError("output stage modified sampling-model parameters");
      }
      m.output_loss += out.loss;
      correct += out.correct;
      ++batches;
    }
    m.sampling_loss /= static_cast<double>(batches);
    m.output_loss /= static_cast<double>(batches);
    m.train_acc = static_cast<double>(correct) / static_cast<double>(order.size());
    const Evaluation val = evaluate(model, data, val_idx, config.samples);
    m.val_acc = val.accuracy;
    m.val_loss = val.loss;
    // Best accuracy so far; among equal accuracies the lower loss.
    if (run.metrics.best_epoch < 0 || m.val_acc > run.metrics.best_val_acc ||
        (m.val_acc == run.metrics.best_val_acc && m.val_loss < run.metrics.best_val_loss)) {
      run.metrics.best_val_acc = m.val_acc;
      run.metrics.best_val_loss = m.val_loss;
      run.metrics.best_epoch = epoch;
      run.model = model;
    }
    run.metrics.epochs.push_back(m);
    if (sink) sink(m);
  }
  run.metrics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

double population_stddev(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / values.size());
}

CvResult evaluate_cv(const GraphDataset& data, const TrainConfig& config, int k, int jobs,
                     const MetricsSink& sink) {
  const FoldSplit split = stratified_k_fold(data, k, config.seed);
  CvResult result;
  result.fold_best.assign(static_cast<std::size_t>(k), 0.0);
  std::vector<std::optional<Model>> models(static_cast<std::size_t>(k));
  std::mutex sink_mutex;
  auto locked_sink = [&](const EpochMetrics& m) {
    if (!sink) return;
    std::lock_guard lock(sink_mutex);
    sink(m);
  };
  auto run_fold = [&](int fold) {
    const auto train_idx = split.training_indices(fold);
    const auto val_idx = split.validation_indices(fold);
    FoldRun run = train(data, train_idx, val_idx, config, fold, locked_sink);
    result.fold_best[static_cast<std::size_t>(fold)] = run.metrics.best_val_acc;
    models[static_cast<std::size_t>(fold)] = std::move(run.model);
  };

  jobs = std::max(1, std::min(jobs, k));
  if (jobs == 1) {
    for (int fold = 0; fold < k; ++fold) run_fold(fold);
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (int fold = next++; fold < k; fold = next++) run_fold(fold);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& th : workers) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  for (auto& m : models) result.best_models.push_back(std::move(*m));
  result.mean = std::accumulate(result.fold_best.begin(), result.fold_best.end(), 0.0) / k;
  result.stddev = population_stddev(result.fold_best);
  return result;
}

}  // namespace walkex
