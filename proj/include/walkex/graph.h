// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WALKEX_GRAPH_H_
#define WALKEX_GRAPH_H_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "walkex/matrix.h"

namespace walkex {

using NodeId = std::int32_t;
using Edge = std::pair<NodeId, NodeId>;  // stored with first < second

// Immutable simple undirected graph. Node ids are dense and 0-based.
class Graph {
 public:
  Graph() = default;

  // Builds from an undirected edge list. Parallel edges (in either
  // direction) collapse to one; self-loops and out-of-range ids throw
  // InputError.
  Graph(NodeId node_count, std::span<const Edge> edges);

  NodeId node_count() const { return static_cast<NodeId>(adjacency_.size()); }
  std::size_t edge_count() const { return edge_count_; }

  // Sorted ascending. Throws InputError when v is out of range.
  std::span<const NodeId> neighbors(NodeId v) const;
  std::size_t degree(NodeId v) const { return neighbors(v).size(); }
  bool has_edge(NodeId u, NodeId v) const;

  // All edges (u < v), sorted lexicographically.
  std::vector<Edge> edges() const;

  void check_node(NodeId v) const;

 private:
  std::vector<std::vector<NodeId>> adjacency_;
  std::size_t edge_count_ = 0;
};

// Row v holds the feature vector of node v.
class NodeFeatureMatrix {
 public:
  NodeFeatureMatrix() = default;
  explicit NodeFeatureMatrix(Matrix values);

  // One-hot rows; labels[v] must lie in [0, dim).
  static NodeFeatureMatrix one_hot(std::span<const int> labels, int dim);
  static NodeFeatureMatrix constant(NodeId node_count);

  std::size_t rows() const { return values_.rows(); }
  std::size_t dim() const { return values_.cols(); }
  const Matrix& values() const { return values_; }

  friend bool operator==(const NodeFeatureMatrix&, const NodeFeatureMatrix&) = default;

 private:
  Matrix values_;
};

// A walk on the host graph: consecutive entries are adjacent.
struct WalkState {
  std::vector<NodeId> sequence;
  friend bool operator==(const WalkState&, const WalkState&) = default;
};

// Connected node set plus the edges it induces. Both sorted.
struct SubgraphState {
  std::vector<NodeId> nodes;
  std::vector<Edge> edges;
  friend bool operator==(const SubgraphState&, const SubgraphState&) = default;
};

// True iff the subgraph induced by `nodes` is connected. {} and singletons
// count as connected. Duplicate ids are ignored.
bool is_connected(const Graph& g, std::span<const NodeId> nodes);

// Throws ConstraintError when `nodes` is not connected in g.
SubgraphState induced_subgraph(const Graph& g, std::span<const NodeId> nodes);

// A walk inside the induced subgraph that visits every node of `nodes`.
// Built as a truncated depth-first tour of a spanning tree, so the result
// has at most 2|nodes| - 1 entries. Throws ConstraintError on an empty or
// disconnected set.
WalkState covering_walk(const Graph& g, std::span<const NodeId> nodes);

// True iff every consecutive pair of `walk` is an edge of g.
bool is_valid_walk(const Graph& g, std::span<const NodeId> walk);

// Relabels node v to perm[v].
Graph permute(const Graph& g, std::span<const NodeId> perm);

}  // namespace walkex

#endif  // WALKEX_GRAPH_H_
