// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WALKEX_DATASET_INL_H_
#define WALKEX_DATASET_INL_H_

#include <algorithm>
#include <random>

#include "walkex/error.h"

namespace walkex {

template <class Rng>
std::vector<Edge> barabasi_albert_edges(NodeId node_count, int attach_edges, Rng& rng) {
  if (attach_edges < 1) throw InputError("barabasi_albert_edges: attach_edges must be >= 1");
  if (node_count < attach_edges + 1) {
    throw InputError("barabasi_albert_edges: need at least attach_edges + 1 nodes");
  }
  std::vector<Edge> edges;
  // Every edge endpoint is listed once, so a uniform draw from `ends` is a
  // degree-proportional draw over nodes.
  std::vector<NodeId> ends;
  for (NodeId u = 0; u <= attach_edges; ++u) {
    for (NodeId v = u + 1; v <= attach_edges; ++v) {
      edges.emplace_back(u, v);
      ends.push_back(u);
      ends.push_back(v);
    }
  }
  for (NodeId v = attach_edges + 1; v < node_count; ++v) {
    std::vector<NodeId> targets;
    while (static_cast<int>(targets.size()) < attach_edges) {
      std::uniform_int_distribution<std::size_t> pick(0, ends.size() - 1);
      NodeId t = ends[pick(rng)];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    std::sort(targets.begin(), targets.end());
    for (NodeId t : targets) {
      edges.emplace_back(t, v);
      ends.push_back(t);
      ends.push_back(v);
    }
  }
  return edges;
}

}  // namespace walkex

#endif  // WALKEX_DATASET_INL_H_
