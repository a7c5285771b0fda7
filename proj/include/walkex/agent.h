// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WALKEX_AGENT_H_
#define WALKEX_AGENT_H_

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "walkex/autodiff.h"
#include "walkex/mdp.h"
#include "walkex/nn.h"

namespace walkex {

// Exploration rate that grows linearly from `start` to `end` over the run.
struct EpsilonSchedule {
  double start = 0.1;
  double end = 0.4;
  int epochs = 1;

  double at(int epoch) const;
};

// Policy and target Q-networks. Both map [state encoding | Z(action)] to a
// scalar; the target only ever moves through soft_update.
struct AgentPair {
  Mlp policy;
  Mlp target;
  std::size_t state_dim = 0;
  std::size_t embed_dim = 0;

  AgentPair() = default;
  AgentPair(std::size_t state_dim, std::size_t embed_dim, std::size_t hidden = 64,
            const std::string& policy_prefix = "phi",
            const std::string& target_prefix = "phi_target");

  // Initializes the policy and copies it into the target.
  void init(ParameterStore& store, std::mt19937_64& rng) const;
  std::size_t q_input_dim() const { return state_dim + embed_dim; }
};

struct Transition {
  EnvState state;
  NodeId action = 0;
  double reward = 0.0;
  EnvState next;
  bool terminal = false;
};

struct Trajectory {
  std::size_t graph_index = 0;
  std::vector<Transition> steps;
  std::vector<double> q_values;  // policy Q of each chosen action
};

inline constexpr double kGreedy = std::numeric_limits<double>::infinity();

// Q(state_enc, action) from `net` (policy or target).
double q_value(ParameterStore& store, const Mlp& net, const Matrix& state_enc, NodeId action,
               const Matrix& z);
// One Q per action, evaluated as a single batch.
std::vector<double> q_values(ParameterStore& store, const Mlp& net, const Matrix& state_enc,
                             std::span<const NodeId> actions, const Matrix& z);

// Snapshot of a Q-network over one graph's embedding. Scores equal
// q_values on the dense encoding up to roundoff, but reuse per-node
// first-layer products across calls.
class QScorer {
 public:
  QScorer(const ParameterStore& store, const Mlp& net, const Matrix& z, const EnvConfig& config);

  std::vector<double> operator()(const EnvState& s, std::span<const NodeId> actions);
  const EnvConfig& config() const { return config_; }

 private:
  EnvConfig config_;
  SlotMlp mlp_;
};

// SlotRows of [E(s) | Z(a)] for each action.
SlotRows q_rows(const EnvState& s, std::span<const NodeId> actions, const EnvConfig& config);

// q < epsilon: uniform over feasible actions (drawn from rng); otherwise the
// feasible action with the largest policy Q, lowest id on ties. Pass
// q = kGreedy for inference. Throws ContractError when nothing is feasible.
NodeId epsilon_greedy_action(const Graph& g, const EnvState& s, double q, double epsilon,
                             ParameterStore& store, const AgentPair& agent, const Matrix& z,
                             const EnvConfig& config, std::mt19937_64& rng);
NodeId epsilon_greedy_action(const Graph& g, const EnvState& s, double q, double epsilon,
                             QScorer& policy, std::mt19937_64& rng);

// r + gamma * max_a' Q_target(s', a'), or r alone when s' is terminal or has
// no feasible action. No gradient is recorded.
double q_target(const Graph& g, double r, const EnvState& s_next, bool terminal, double gamma,
                ParameterStore& store, const AgentPair& agent, const Matrix& z,
                const EnvConfig& config);
double q_target(const Graph& g, double r, const EnvState& s_next, bool terminal, double gamma,
                QScorer& target);

// Sum over all transitions of |Q_policy(E(s, Z), a) - target|, where the
// targets were computed with the target net beforehand. Gradients reach the
// policy net and, through Z, whatever produced it. `z_of` maps a graph
// index to its embedding on this tape.
Var trajectory_loss(Tape& t, ParameterStore& store, const AgentPair& agent,
                    std::span<const Trajectory> trajectories, std::span<const double> targets,
                    const std::function<Var(std::size_t)>& z_of, const EnvConfig& config);

// target <- beta * policy + (1 - beta) * target, elementwise.
void soft_update(ParameterStore& store, const AgentPair& agent, double beta);

// The K best initial actions by policy Q (all nodes are candidates),
// ordered by Q descending with ties by node id. Returns every node when the
// graph has fewer than K.
std::vector<NodeId> top_k_initial_actions(const Graph& g, ParameterStore& store,
                                          const AgentPair& agent, const Matrix& z, int k,
                                          const EnvConfig& config);
std::vector<NodeId> top_k_initial_actions(const Graph& g, QScorer& policy, int k);

enum class RolloutMode { kTrain, kGreedy };

struct RolloutResult {
  std::vector<Trajectory> trajectories;
  std::vector<EnvState> finals;
};

struct RolloutOptions {
  RolloutMode mode = RolloutMode::kGreedy;
  int samples = 1;        // K
  double epsilon = 0.0;   // used in train mode
  double gamma = 0.9;     // used to fill Q targets in train mode
  const RewardEvaluator* evaluator = nullptr;  // required in train mode
};

// K trajectories per graph. Trajectory j starts from the j-th of the top-K
// initial actions and continues with the epsilon-greedy policy until the
// state is terminal. In train mode the initial choice is itself
// epsilon-greedy (a uniform node with probability epsilon), every step draws
// q ~ U(0, 1), rewards come from the evaluator, and `targets` (if given)
// receives one Q target per transition in trajectory order.
RolloutResult rollout(const Graph& g, std::size_t graph_index, ParameterStore& store,
                      const AgentPair& agent, const Matrix& z, const EnvConfig& config,
                      const RolloutOptions& options, std::mt19937_64& rng,
                      std::vector<double>* targets = nullptr);

}  // namespace walkex

#endif  // WALKEX_AGENT_H_
