// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkex/agent.h"

#include <algorithm>
#include <numeric>

#include "walkex/error.h"

namespace walkex {

double EpsilonSchedule::at(int epoch) const {
  const double lo = std::min(start, end);
  const double hi = std::max(start, end);
  if (epochs <= 1) return start;
  const double e = start + (end - start) * static_cast<double>(epoch) / (epochs - 1);
  return std::clamp(e, lo, hi);
}

AgentPair::AgentPair(std::size_t state_dim, std::size_t embed_dim, std::size_t hidden,
                     const std::string& policy_prefix, const std::string& target_prefix)
    : policy(policy_prefix, {state_dim + embed_dim, hidden, hidden, 1}),
      target(target_prefix, {state_dim + embed_dim, hidden, hidden, 1}),
      state_dim(state_dim),
      embed_dim(embed_dim) {}

void AgentPair::init(ParameterStore& store, std::mt19937_64& rng) const {
  policy.init(store, rng);
  const auto from = policy.parameter_names();
  const auto to = target.parameter_names();
  for (std::size_t i = 0; i < from.size(); ++i) store.add(to[i], store.at(from[i]).value);
}

namespace {

// Rows [state_enc | z(action)] for each action.
Matrix q_inputs(const Matrix& state_enc, std::span<const NodeId> actions, const Matrix& z) {
  const std::size_t s = state_enc.cols(), k = z.cols();
  Matrix x(actions.size(), s + k);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    auto row = x.row(i);
    std::copy(state_enc.data().begin(), state_enc.data().end(), row.begin());
    auto zr = z.row(static_cast<std::size_t>(actions[i]));
    std::copy(zr.begin(), zr.end(), row.begin() + static_cast<std::ptrdiff_t>(s));
  }
  return x;
}

std::size_t argmax_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace

std::vector<double> q_values(ParameterStore& store, const Mlp& net, const Matrix& state_enc,
                             std::span<const NodeId> actions, const Matrix& z) {
  if (state_enc.rows() != 1 || state_enc.cols() + z.cols() != net.in_dim()) {
    throw ContractError("q_values: state encoding and embedding do not match the Q-net input");
  }
  if (actions.empty()) return {};
  for (NodeId a : actions) {
    if (a < 0 || static_cast<std::size_t>(a) >= z.rows()) {
      throw ContractError("q_values: action outside the embedding rows");
    }
  }
  Tape t(false);
  const Matrix& out = t.value(net.forward(t, store, t.constant(q_inputs(state_enc, actions, z))));
  return std::vector<double>(out.data().begin(), out.data().end());
}

double q_value(ParameterStore& store, const Mlp& net, const Matrix& state_enc, NodeId action,
               const Matrix& z) {
  const NodeId a[1] = {action};
  return q_values(store, net, state_enc, a, z).front();
}

QScorer::QScorer(const ParameterStore& store, const Mlp& net, const Matrix& z,
                 const EnvConfig& config)
    : config_(config), mlp_(store, net, z, state_slots(config) + 1) {}

std::vector<double> QScorer::operator()(const EnvState& s, std::span<const NodeId> actions) {
  if (actions.empty()) return {};
  SlotRows shared(mlp_.slots());
  append_state_terms(s, config_, 1.0, shared);
  shared.end_row();
  const Matrix out =
      mlp_.forward_shared(shared, static_cast<std::uint32_t>(mlp_.slots() - 1), actions);
  return std::vector<double>(out.data().begin(), out.data().end());
}

SlotRows q_rows(const EnvState& s, std::span<const NodeId> actions, const EnvConfig& config) {
  const auto action_slot = static_cast<std::uint32_t>(state_slots(config));
  SlotRows rows(action_slot + 1);
  for (NodeId a : actions) {
    append_state_terms(s, config, 1.0, rows);
    rows.add(action_slot, a);
    rows.end_row();
  }
  return rows;
}

NodeId epsilon_greedy_action(const Graph& g, const EnvState& s, double q, double epsilon,
                             QScorer& policy, std::mt19937_64& rng) {
  const auto actions = feasible_actions(g, s);
  if (actions.empty()) throw ContractError("epsilon_greedy_action: no feasible action");
  if (q < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
    return actions[pick(rng)];
  }
  return actions[argmax_lowest(policy(s, actions))];
}

NodeId epsilon_greedy_action(const Graph& g, const EnvState& s, double q, double epsilon,
                             ParameterStore& store, const AgentPair& agent, const Matrix& z,
                             const EnvConfig& config, std::mt19937_64& rng) {
  QScorer policy(store, agent.policy, z, config);
  return epsilon_greedy_action(g, s, q, epsilon, policy, rng);
}

double q_target(const Graph& g, double r, const EnvState& s_next, bool terminal, double gamma,
                QScorer& target) {
  if (terminal) return r;
  const auto actions = feasible_actions(g, s_next);
  if (actions.empty()) return r;
  const auto qs = target(s_next, actions);
  return r + gamma * *std::max_element(qs.begin(), qs.end());
}

double q_target(const Graph& g, double r, const EnvState& s_next, bool terminal, double gamma,
                ParameterStore& store, const AgentPair& agent, const Matrix& z,
                const EnvConfig& config) {
  QScorer target(store, agent.target, z, config);
  return q_target(g, r, s_next, terminal, gamma, target);
}

Var trajectory_loss(Tape& t, ParameterStore& store, const AgentPair& agent,
                    std::span<const Trajectory> trajectories, std::span<const double> targets,
                    const std::function<Var(std::size_t)>& z_of, const EnvConfig& config) {
  std::size_t transitions = 0;
  for (const auto& traj : trajectories) transitions += traj.steps.size();
  if (transitions != targets.size()) {
    throw ContractError("trajectory_loss: one target per transition is required");
  }
  if (transitions == 0) return t.constant(Matrix(1, 1));
  const auto action_slot = static_cast<std::uint32_t>(state_slots(config));
  // Consecutive trajectories of the same graph share one batched forward.
  std::vector<Var> blocks;
  for (std::size_t i = 0; i < trajectories.size();) {
    const std::size_t graph = trajectories[i].graph_index;
    SlotRows rows(action_slot + 1);
    for (; i < trajectories.size() && trajectories[i].graph_index == graph; ++i) {
      for (const auto& step : trajectories[i].steps) {
        append_state_terms(step.state, config, 1.0, rows);
        rows.add(action_slot, step.action);
        rows.end_row();
      }
    }
    if (rows.rows() > 0) blocks.push_back(agent.policy.forward_slots(t, store, z_of(graph), rows));
  }
  Var pred = ops::vstack(t, blocks);
  Var target = t.constant(Matrix(targets.size(), 1, std::vector<double>(targets.begin(), targets.end())));
  return ops::l1_loss(t, pred, target);
}

void soft_update(ParameterStore& store, const AgentPair& agent, double beta) {
  if (beta < 0.0 || beta > 1.0) throw InputError("soft_update: beta must lie in [0, 1]");
  const auto from = agent.policy.parameter_names();
  const auto to = agent.target.parameter_names();
  for (std::size_t i = 0; i < from.size(); ++i) {
    const Matrix& p = store.at(from[i]).value;
    Matrix& tgt = store.at(to[i]).value;
    for (std::size_t j = 0; j < p.size(); ++j) tgt[j] = beta * p[j] + (1.0 - beta) * tgt[j];
  }
}

std::vector<NodeId> top_k_initial_actions(const Graph& g, QScorer& policy, int k) {
  if (k < 1) throw InputError("top_k_initial_actions: K must be >= 1");
  const EnvState s0 = initial_state(g, 0, policy.config());
  const auto actions = feasible_actions(g, s0);
  const auto qs = policy(s0, actions);
  std::vector<std::size_t> order(actions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return qs[a] > qs[b]; });
  order.resize(std::min(order.size(), static_cast<std::size_t>(k)));
  std::vector<NodeId> out;
  for (auto i : order) out.push_back(actions[i]);
  return out;
}

std::vector<NodeId> top_k_initial_actions(const Graph& g, ParameterStore& store,
                                          const AgentPair& agent, const Matrix& z, int k,
                                          const EnvConfig& config) {
  QScorer policy(store, agent.policy, z, config);
  return top_k_initial_actions(g, policy, k);
}

RolloutResult rollout(const Graph& g, std::size_t graph_index, ParameterStore& store,
                      const AgentPair& agent, const Matrix& z, const EnvConfig& config,
                      const RolloutOptions& options, std::mt19937_64& rng,
                      std::vector<double>* targets) {
  if (g.node_count() == 0) throw InputError("rollout: graph has no nodes");
  const bool train = options.mode == RolloutMode::kTrain;
  if (train && options.evaluator == nullptr) {
    throw ContractError("rollout: train mode needs a reward evaluator");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  QScorer policy(store, agent.policy, z, config);
  std::optional<QScorer> target;
  if (train && targets != nullptr) target.emplace(store, agent.target, z, config);
  const auto starts = top_k_initial_actions(g, policy, options.samples);
  const EnvState s0 = initial_state(g, graph_index, config);
  const double loss0 = train ? (*options.evaluator)(s0) : 0.0;

  RolloutResult result;
  for (NodeId start : starts) {
    Trajectory traj;
    traj.graph_index = graph_index;
    EnvState s = s0;
    double loss_s = loss0;
    bool first = true;
    while (!is_terminal(g, s, config)) {
      NodeId a;
      double q_chosen = 0.0;
      if (first) {
        a = start;
        if (train && unit(rng) < options.epsilon) {
          std::uniform_int_distribution<NodeId> pick(0, g.node_count() - 1);
          a = pick(rng);
        }
        first = false;
        const NodeId chosen[1] = {a};
        q_chosen = policy(s, chosen).front();
      } else {
        const double q = train ? unit(rng) : kGreedy;
        const auto actions = feasible_actions(g, s);
        const auto qs = policy(s, actions);
        std::size_t pick = argmax_lowest(qs);
        if (q < options.epsilon) {
          pick = std::uniform_int_distribution<std::size_t>(0, actions.size() - 1)(rng);
        }
        a = actions[pick];
        q_chosen = qs[pick];
      }
      EnvState next = apply_action(g, s, a);
      Transition tr{s, a, 0.0, next, is_terminal(g, next, config)};
      if (train) {
        const double loss_next = (*options.evaluator)(next);
        tr.reward = loss_s - loss_next;
        loss_s = loss_next;
        if (targets != nullptr) {
          targets->push_back(q_target(g, tr.reward, next, tr.terminal, options.gamma, *target));
        }
      }
      traj.q_values.push_back(q_chosen);
      traj.steps.push_back(std::move(tr));
      s = std::move(next);
    }
    result.finals.push_back(s);
    result.trajectories.push_back(std::move(traj));
  }
  return result;
}

}  // namespace walkex
