// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkex/graph.h"

#include <algorithm>
#include <string>

#include "walkex/error.h"

namespace walkex {

Graph::Graph(NodeId node_count, std::span<const Edge> edges) {
  if (node_count < 0) throw InputError("Graph: negative node count");
  adjacency_.resize(static_cast<std::size_t>(node_count));
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= node_count || v >= node_count) {
      throw InputError("Graph: edge (" + std::to_string(u) + ", " + std::to_string(v) +
                       ") references a node outside [0, " + std::to_string(node_count) + ")");
    }
    if (u == v) {
      throw InputError("Graph: self-loop on node " + std::to_string(u) +
                       " is not allowed in a simple graph");
    }
    adjacency_[u].push_back(v);
    adjacency_[v].push_back(u);
  }
  for (auto& nbrs : adjacency_) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    edge_count_ += nbrs.size();
  }
  edge_count_ /= 2;
}

void Graph::check_node(NodeId v) const {
  if (v < 0 || v >= node_count()) {
    throw InputError("node id " + std::to_string(v) + " outside [0, " +
                     std::to_string(node_count()) + ")");
  }
}

std::span<const NodeId> Graph::neighbors(NodeId v) const {
  check_node(v);
  return adjacency_[v];
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  auto nbrs = neighbors(u);
  check_node(v);
  return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (NodeId u = 0; u < node_count(); ++u) {
    for (NodeId v : adjacency_[u]) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

NodeFeatureMatrix::NodeFeatureMatrix(Matrix values) : values_(std::move(values)) {
  if (!values_.all_finite()) throw InputError("NodeFeatureMatrix: non-finite entry");
}

NodeFeatureMatrix NodeFeatureMatrix::one_hot(std::span<const int> labels, int dim) {
  if (dim <= 0) throw InputError("one_hot: dimension must be positive");
  Matrix m(labels.size(), static_cast<std::size_t>(dim));
  for (std::size_t v = 0; v < labels.size(); ++v) {
    if (labels[v] < 0 || labels[v] >= dim) {
      throw InputError("one_hot: label " + std::to_string(labels[v]) + " outside [0, " +
                       std::to_string(dim) + ")");
    }
    m(v, static_cast<std::size_t>(labels[v])) = 1.0;
  }
  return NodeFeatureMatrix(std::move(m));
}

NodeFeatureMatrix NodeFeatureMatrix::constant(NodeId node_count) {
  return NodeFeatureMatrix(Matrix(static_cast<std::size_t>(node_count), 1, 1.0));
}

namespace {

std::vector<NodeId> sorted_unique(const Graph& g, std::span<const NodeId> nodes) {
  std::vector<NodeId> out(nodes.begin(), nodes.end());
  for (NodeId v : out) g.check_node(v);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<char> membership(const Graph& g, std::span<const NodeId> nodes) {
  std::vector<char> in(static_cast<std::size_t>(g.node_count()), 0);
  for (NodeId v : nodes) in[v] = 1;
  return in;
}

}  // namespace

bool is_connected(const Graph& g, std::span<const NodeId> nodes) {
  auto set = sorted_unique(g, nodes);
  if (set.size() <= 1) return true;
  auto in = membership(g, set);
  std::vector<char> seen(in.size(), 0);
  std::vector<NodeId> stack{set.front()};
  seen[set.front()] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (NodeId w : g.neighbors(u)) {
      if (in[w] && !seen[w]) {
        seen[w] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  return reached == set.size();
}

SubgraphState induced_subgraph(const Graph& g, std::span<const NodeId> nodes) {
  if (!is_connected(g, nodes)) {
    throw ConstraintError("induced_subgraph: node set is not connected");
  }
  SubgraphState s;
  s.nodes = sorted_unique(g, nodes);
  auto in = membership(g, s.nodes);
  for (NodeId u : s.nodes) {
    for (NodeId v : g.neighbors(u)) {
      if (u < v && in[v]) s.edges.emplace_back(u, v);
    }
  }
  return s;
}

WalkState covering_walk(const Graph& g, std::span<const NodeId> nodes) {
  auto set = sorted_unique(g, nodes);
  if (set.empty()) throw ConstraintError("covering_walk: empty node set");
  if (!is_connected(g, set)) throw ConstraintError("covering_walk: node set is not connected");
  auto in = membership(g, set);

  auto induced_degree = [&](NodeId v) {
    return std::count_if(g.neighbors(v).begin(), g.neighbors(v).end(),
                         [&](NodeId w) { return in[w] != 0; });
  };
  // Starting at a low-degree node lets the tour begin at a tree leaf.
  NodeId root = *std::min_element(set.begin(), set.end(), [&](NodeId a, NodeId b) {
    return induced_degree(a) < induced_degree(b);
  });

  // Depth-first spanning tree of the induced subgraph.
  const std::size_t n = in.size();
  std::vector<NodeId> parent(n, -1);
  std::vector<std::vector<NodeId>> children(n);
  std::vector<NodeId> order;  // preorder
  std::vector<char> seen(n, 0);
  std::vector<NodeId> stack{root};
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    if (seen[u]) continue;
    seen[u] = 1;
    order.push_back(u);
    if (parent[u] >= 0) children[parent[u]].push_back(u);
    auto nbrs = g.neighbors(u);
    for (auto it = nbrs.rbegin(); it != nbrs.rend(); ++it) {
      if (in[*it] && !seen[*it]) {
        parent[*it] = u;
        stack.push_back(*it);
      }
    }
  }

  // Visit the tallest subtree last so the truncated tail is as long as
  // possible.
  std::vector<int> height(n, 0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    for (NodeId c : children[*it]) height[*it] = std::max(height[*it], height[c] + 1);
  }
  for (NodeId u : set) {
    std::stable_sort(children[u].begin(), children[u].end(),
                     [&](NodeId a, NodeId b) { return height[a] < height[b]; });
  }

  // Euler tour, cut right after the final first visit.
  WalkState walk;
  std::vector<std::pair<NodeId, std::size_t>> frames{{root, 0}};
  walk.sequence.push_back(root);
  std::size_t visited = 1;
  while (!frames.empty() && visited < set.size()) {
    auto& [u, next] = frames.back();
    if (next < children[u].size()) {
      NodeId c = children[u][next++];
      walk.sequence.push_back(c);
      ++visited;
      frames.emplace_back(c, 0);
    } else {
      frames.pop_back();
      if (!frames.empty()) walk.sequence.push_back(frames.back().first);
    }
  }
  return walk;
}

bool is_valid_walk(const Graph& g, std::span<const NodeId> walk) {
  for (NodeId v : walk) {
    if (v < 0 || v >= g.node_count()) return false;
  }
  for (std::size_t i = 1; i < walk.size(); ++i) {
    if (!g.has_edge(walk[i - 1], walk[i])) return false;
  }
  return true;
}

Graph permute(const Graph& g, std::span<const NodeId> perm) {
  if (perm.size() != static_cast<std::size_t>(g.node_count())) {
    throw InputError("permute: permutation size does not match node count");
  }
  std::vector<Edge> edges;
  for (auto [u, v] : g.edges()) edges.emplace_back(perm[u], perm[v]);
  return Graph(g.node_count(), edges);
}

}  // namespace walkex
