// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WALKEX_PIPELINE_H_
#define WALKEX_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "walkex/agent.h"
#include "walkex/dataset.h"
#include "walkex/mdp.h"
#include "walkex/nn.h"

namespace walkex {

enum class Pooling { kMean, kMax };

struct TrainConfig {
  MdpKind kind = MdpKind::kWalkExploration;
  int max_steps = 16;  // L or N
  int samples = 3;     // K
  int epochs = 200;
  int batch_size = 32;
  double gamma = 0.9;
  double beta = 0.1;
  double eps_start = 0.1;
  double eps_end = 0.4;
  double lr_sampling = 1e-3;
  double lr_output = 1e-3;
  std::uint64_t seed = 0;

  int mpnn_layers = 3;
  std::size_t hidden_dim = 32;
  std::size_t embed_dim = 32;  // k
  std::size_t q_hidden = 64;
  Pooling pooling = Pooling::kMean;
  // Node features are multiplied by this before both MPNNs. Sum
  // aggregation on hub-heavy graphs gives large embeddings otherwise.
  double input_scale = 1.0;

  // Re-check the frozen parameter groups after every stage.
  bool check_isolation = false;

  EnvConfig env() const { return {kind, max_steps}; }
  void validate() const;  // throws InputError
};

// Graphlet MPNN (group "theta") plus the Q-network pair ("phi",
// "phi_target").
struct SamplingModel {
  Mpnn graphlet;
  AgentPair agent;
  EnvConfig env;
  EpsilonSchedule epsilon;
  double gamma = 0.9;
  double beta = 0.1;

  std::vector<std::string> trainable() const;  // theta + phi
};

// Output MPNN ("theta_out") plus the decoder MLP ("theta_dec").
struct OutputModel {
  Mpnn encoder;
  Mlp decoder;
  EnvConfig env;
  Pooling pooling = Pooling::kMean;
  int num_classes = 2;

  std::vector<std::string> trainable() const;
};

// Both halves and the parameters they share a store for.
struct Model {
  ParameterStore store;
  SamplingModel sampling;
  OutputModel output;

  static Model create(const TrainConfig& config, std::size_t feature_dim, int num_classes);
  // Layout only; parameters are filled in from a checkpoint.
  static Model layout(const TrainConfig& config, std::size_t feature_dim, int num_classes);
};

// Encodes each final state with the output MPNN's embeddings, pools the K
// encodings and decodes to num_classes logits.
Var output_forward(Tape& t, ParameterStore& store, const OutputModel& om, const Graph& g,
                   const NodeFeatureMatrix& x, std::span<const EnvState> finals);

// l(O(s)) with frozen output parameters. The output embeddings are computed
// once; the returned callable copies what it needs and never records.
RewardEvaluator make_reward_evaluator(ParameterStore& store, const OutputModel& om,
                                      const Graph& g, const NodeFeatureMatrix& x, int label);

// Graphlet-aware embeddings Z without gradient.
Matrix graphlet_embeddings(ParameterStore& store, const SamplingModel& sm, const Graph& g,
                           const NodeFeatureMatrix& x);

struct StageResult {
  double loss = 0.0;
  std::size_t correct = 0;  // output stage only: training predictions that hit
};

// One Q-learning step on (theta, phi) over the batch, then a soft update of
// phi_target. Output parameters stay fixed.
StageResult train_sampling_stage(Model& model, const GraphDataset& data,
                                 std::span<const std::size_t> batch, double epsilon, int samples,
                                 double lr, std::mt19937_64& rng);

// Greedy top-K rollouts, mean cross-entropy of the pooled decodings, one
// gradient step on (theta_out, theta_dec). Sampling parameters stay fixed.
StageResult train_output_stage(Model& model, const GraphDataset& data,
                               std::span<const std::size_t> batch, int samples, double lr);

struct EpochMetrics {
  int epoch = 0;
  int fold = 0;
  double sampling_loss = 0.0;
  double output_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double val_loss = 0.0;  // mean cross-entropy of the inferred logits
  double epsilon = 0.0;

  std::string to_json() const;
};

struct RunMetrics {
  std::vector<EpochMetrics> epochs;
  double best_val_acc = 0.0;
  double best_val_loss = 0.0;  // at best_epoch
  int best_epoch = -1;
  double wall_seconds = 0.0;
};

using MetricsSink = std::function<void(const EpochMetrics&)>;

struct FoldRun {
  RunMetrics metrics;
  Model model;  // parameters at the best validation epoch
};

// Alternates the sampling and output stages over shuffled training batches
// each epoch, then scores the validation graphs with infer().
FoldRun train(const GraphDataset& data, std::span<const std::size_t> train_idx,
              std::span<const std::size_t> val_idx, const TrainConfig& config, int fold = 0,
              const MetricsSink& sink = {});

struct Inference {
  int predicted = 0;
  std::vector<EnvState> finals;
  std::vector<Trajectory> trajectories;
  Matrix logits;
};

// Greedy top-K rollouts plus the output model. Ties in the logits go to the
// lower class id.
Inference infer(Model& model, const Graph& g, const NodeFeatureMatrix& x, int samples,
                std::size_t graph_index = 0);

double accuracy(Model& model, const GraphDataset& data, std::span<const std::size_t> indices,
                int samples);

struct Evaluation {
  double accuracy = 0.0;
  double loss = 0.0;  // mean cross-entropy
};

Evaluation evaluate(Model& model, const GraphDataset& data, std::span<const std::size_t> indices,
                    int samples);

struct CvResult {
  std::vector<double> fold_best;
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::vector<Model> best_models;
};

// Trains one model per fold from scratch. `jobs` folds run concurrently.
CvResult evaluate_cv(const GraphDataset& data, const TrainConfig& config, int k = 10,
                     int jobs = 1, const MetricsSink& sink = {});

double population_stddev(std::span<const double> values);

// Seed for fold-local randomness derived from (seed, fold).
std::uint64_t fold_seed(std::uint64_t seed, int fold);

}  // namespace walkex

#endif  // WALKEX_PIPELINE_H_
