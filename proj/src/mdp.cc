// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkex/mdp.h"

#include <algorithm>
#include <sstream>

#include "json.hpp"

#include "walkex/error.h"

namespace walkex {

std::string to_string(MdpKind kind) {
  return kind == MdpKind::kWalkExploration ? "walk" : "subgraph";
}

MdpKind parse_mdp_kind(const std::string& text) {
  if (text == "walk") return MdpKind::kWalkExploration;
  if (text == "subgraph") return MdpKind::kSubgraphGeneration;
  throw InputError("unknown MDP kind '" + text + "' (expected walk or subgraph)");
}

EnvState initial_state(const Graph& g, std::size_t graph_index, const EnvConfig& config) {
  if (g.node_count() == 0) throw InputError("initial_state: graph has no nodes");
  if (config.max_steps < 1) throw InputError("initial_state: max_steps must be >= 1");
  EnvState s;
  s.kind = config.kind;
  s.graph_index = graph_index;
  return s;
}

std::vector<NodeId> feasible_actions(const Graph& g, const EnvState& s) {
  std::vector<NodeId> out;
  if (s.empty()) {
    out.resize(static_cast<std::size_t>(g.node_count()));
    for (NodeId v = 0; v < g.node_count(); ++v) out[v] = v;
    return out;
  }
  if (s.kind == MdpKind::kWalkExploration) {
    auto nbrs = g.neighbors(s.walk.sequence.back());
    return {nbrs.begin(), nbrs.end()};
  }
  const auto& members = s.subgraph.nodes;
  for (NodeId v : members) {
    for (NodeId u : g.neighbors(v)) {
      if (!std::binary_search(members.begin(), members.end(), u)) out.push_back(u);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

EnvState apply_action(const Graph& g, const EnvState& s, NodeId a) {
  g.check_node(a);
  EnvState next = s;
  if (s.kind == MdpKind::kWalkExploration) {
    if (!s.empty() && !g.has_edge(s.walk.sequence.back(), a)) {
      throw ContractError("apply_action: node " + std::to_string(a) +
                          " is not a neighbor of the walk end");
    }
    next.walk.sequence.push_back(a);
  } else {
    auto& nodes = next.subgraph.nodes;
    if (std::binary_search(nodes.begin(), nodes.end(), a)) {
      throw ContractError("apply_action: node " + std::to_string(a) + " already in the subgraph");
    }
    std::vector<Edge> added;
    for (NodeId j : g.neighbors(a)) {
      if (std::binary_search(nodes.begin(), nodes.end(), j)) {
        added.emplace_back(std::min(a, j), std::max(a, j));
      }
    }
    if (!s.empty() && added.empty()) {
      throw ContractError("apply_action: node " + std::to_string(a) +
                          " is not on the subgraph border");
    }
    nodes.insert(std::upper_bound(nodes.begin(), nodes.end(), a), a);
    auto& edges = next.subgraph.edges;
    edges.insert(edges.end(), added.begin(), added.end());
    std::sort(edges.begin(), edges.end());
  }
  ++next.step;
  return next;
}

bool is_terminal(const Graph& g, const EnvState& s, const EnvConfig& config) {
  if (s.step >= config.max_steps) return true;
  return feasible_actions(g, s).empty();
}

std::size_t state_encoding_dim(const EnvConfig& config, std::size_t k) {
  return config.kind == MdpKind::kWalkExploration
             ? static_cast<std::size_t>(config.max_steps) * k
             : k;
}

Var encode_state(Tape& t, Var z, const EnvState& s, const EnvConfig& config) {
  if (s.kind != config.kind) throw ContractError("encode_state: state kind differs from config");
  if (s.kind == MdpKind::kWalkExploration) {
    return ops::concat_rows_padded(t, z, s.walk.sequence,
                                   static_cast<std::size_t>(config.max_steps));
  }
  return ops::mean_of_rows(t, z, s.subgraph.nodes);
}

std::size_t state_slots(const EnvConfig& config) {
  return config.kind == MdpKind::kWalkExploration ? static_cast<std::size_t>(config.max_steps)
                                                  : 1;
}

void append_state_terms(const EnvState& s, const EnvConfig& config, double coef,
                        SlotRows& rows) {
  if (s.kind != config.kind) throw ContractError("append_state_terms: state kind differs from config");
  if (s.kind == MdpKind::kWalkExploration) {
    const auto& seq = s.walk.sequence;
    if (seq.size() > static_cast<std::size_t>(config.max_steps)) {
      throw ContractError("append_state_terms: walk longer than max_steps");
    }
    for (std::size_t i = 0; i < seq.size(); ++i) {
      rows.add(static_cast<std::uint32_t>(i), seq[i], coef);
    }
    return;
  }
  const auto& nodes = s.subgraph.nodes;
  for (NodeId v : nodes) rows.add(0, v, coef / static_cast<double>(nodes.size()));
}

Matrix encode_state(const Matrix& z, const EnvState& s, const EnvConfig& config) {
  Tape t(false);
  return t.value(encode_state(t, t.constant(z), s, config));
}

double reward(const EnvState& s, NodeId /*a*/, const EnvState& s_next,
              const RewardEvaluator& evaluator) {
  return evaluator(s) - evaluator(s_next);
}

std::vector<Edge> state_edges(const EnvState& s) {
  if (s.kind == MdpKind::kSubgraphGeneration) return s.subgraph.edges;
  std::vector<Edge> out;
  const auto& seq = s.walk.sequence;
  for (std::size_t i = 1; i < seq.size(); ++i) {
    out.emplace_back(std::min(seq[i - 1], seq[i]), std::max(seq[i - 1], seq[i]));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string to_dot(const Graph& g, const EnvState& s, const std::string& graph_name) {
  std::vector<char> node_on(static_cast<std::size_t>(g.node_count()), 0);
  for (NodeId v : s.nodes()) node_on[v] = 1;
  const auto marked = state_edges(s);

  std::ostringstream out;
  out << "graph \"" << graph_name << "\" {\n";
  out << "  node [shape=circle, style=filled, fillcolor=\"#dddddd\"];\n";
  for (NodeId v = 0; v < g.node_count(); ++v) {
    out << "  " << v;
    if (node_on[v]) out << " [fillcolor=\"#e4572e\", extracted=true]";
    out << ";\n";
  }
  for (const auto& e : g.edges()) {
    out << "  " << e.first << " -- " << e.second;
    if (std::binary_search(marked.begin(), marked.end(), e)) {
      out << " [color=\"#e4572e\", penwidth=3, extracted=true]";
    }
    out << ";\n";
  }
  out << "}\n";
  return out.str();
}

std::string to_json_record(const EnvState& s, std::span<const double> q_values) {
  nlohmann::json j;
  j["graph_index"] = s.graph_index;
  j["kind"] = to_string(s.kind);
  j["nodes"] = std::vector<NodeId>(s.nodes().begin(), s.nodes().end());
  if (s.kind == MdpKind::kWalkExploration) {
    j["walk"] = s.walk.sequence;
    auto nodes = s.walk.sequence;
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    j["nodes"] = nodes;
  } else {
    nlohmann::json edges = nlohmann::json::array();
    for (auto [u, v] : s.subgraph.edges) edges.push_back({u, v});
    j["edges"] = edges;
  }
  j["q_values"] = std::vector<double>(q_values.begin(), q_values.end());
  return j.dump();
}

}  // namespace walkex
