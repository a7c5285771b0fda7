// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WALKEX_MDP_H_
#define WALKEX_MDP_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "walkex/autodiff.h"
#include "walkex/graph.h"

namespace walkex {

// Substructure generators. SubgraphGeneration grows a connected node set
// from its border; WalkExploration appends a neighbor of the last node.
enum class MdpKind { kSubgraphGeneration, kWalkExploration };

std::string to_string(MdpKind kind);
MdpKind parse_mdp_kind(const std::string& text);  // "walk" | "subgraph"

struct EnvConfig {
  MdpKind kind = MdpKind::kWalkExploration;
  int max_steps = 16;  // L for walks, N for subgraphs
};

// Exactly one of walk/subgraph is in use, chosen by `kind`.
struct EnvState {
  MdpKind kind = MdpKind::kWalkExploration;
  WalkState walk;
  SubgraphState subgraph;
  std::size_t graph_index = 0;
  int step = 0;

  // Walk sequence or sorted subgraph node set.
  std::span<const NodeId> nodes() const {
    return kind == MdpKind::kWalkExploration ? std::span<const NodeId>(walk.sequence)
                                             : std::span<const NodeId>(subgraph.nodes);
  }
  bool empty() const { return step == 0; }

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

// l(O(s)) for the frozen output model.
using RewardEvaluator = std::function<double(const EnvState&)>;

// Empty walk or empty subgraph. Throws InputError on a graph with no nodes.
EnvState initial_state(const Graph& g, std::size_t graph_index, const EnvConfig& config);

// Sorted candidate nodes: every node for an empty state, otherwise the
// neighbors of the walk's last node or the border of the subgraph.
std::vector<NodeId> feasible_actions(const Graph& g, const EnvState& s);

// Throws ContractError when `a` is not feasible.
EnvState apply_action(const Graph& g, const EnvState& s, NodeId a);

bool is_terminal(const Graph& g, const EnvState& s, const EnvConfig& config);

// L*k for walks, k for subgraphs.
std::size_t state_encoding_dim(const EnvConfig& config, std::size_t k);

// Subgraph: mean of the member rows of Z. Walk: rows of Z along the walk,
// concatenated and zero-padded to max_steps * k. Empty states encode to
// zeros.
Var encode_state(Tape& t, Var z, const EnvState& s, const EnvConfig& config);
// The same encoding as slot terms: walk position i is slot i; a subgraph
// uses slot 0 with weight coef / |V|. Appends to the open row of `rows`.
std::size_t state_slots(const EnvConfig& config);
void append_state_terms(const EnvState& s, const EnvConfig& config, double coef,
                        SlotRows& rows);
Matrix encode_state(const Matrix& z, const EnvState& s, const EnvConfig& config);

// evaluator(s) - evaluator(s_next); positive when the action lowered the
// downstream loss.
double reward(const EnvState& s, NodeId a, const EnvState& s_next,
              const RewardEvaluator& evaluator);

// Edges covered by the state: induced edges for a subgraph, traversed
// edges (deduplicated, u < v) for a walk.
std::vector<Edge> state_edges(const EnvState& s);

// Graphviz document of g with the extracted nodes and edges marked
// `extracted=true` and colored.
std::string to_dot(const Graph& g, const EnvState& s, const std::string& graph_name = "G");

// {graph_index, kind, nodes, edges | walk, q_values} as one JSON line.
std::string to_json_record(const EnvState& s, std::span<const double> q_values);

}  // namespace walkex

#endif  // WALKEX_MDP_H_
