// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WALKEX_BENCH_H_
#define WALKEX_BENCH_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "walkex/graph.h"
#include "walkex/mdp.h"

namespace walkex {

// Counting how many candidate actions each MDP has to score along a
// trajectory: the subgraph border grows with the subgraph, the walk's
// neighborhood does not.

enum class GraphFamily { kPath, kCycle, kTree, kBa, kComplete };

GraphFamily parse_family(const std::string& name);  // throws InputError
std::string to_string(GraphFamily family);

// kTree is the complete binary tree in heap order (children 2i+1, 2i+2).
// kBa uses `ba_attach` edges per new node.
Graph make_family_graph(GraphFamily family, NodeId n, std::uint64_t seed, int ba_attach = 2);

// Entry t is the number of candidates scored before the first t+1 actions,
// i.e. the running sum of |feasible_actions(s_i)|. Stops early when an
// action sequence ends or the state becomes terminal.
std::vector<std::size_t> cumulative_candidates(const Graph& g, MdpKind kind,
                                               std::span<const NodeId> actions);

// Same count along a uniformly random policy of at most `steps` actions.
std::vector<std::size_t> random_policy_candidates(const Graph& g, MdpKind kind, int steps,
                                                  std::mt19937_64& rng);

struct BenchRow {
  std::string family;
  NodeId n = 0;
  MdpKind kind = MdpKind::kWalkExploration;
  std::uint64_t seed = 0;
  int steps = 0;
  std::size_t cumulative_candidates = 0;
};

struct BenchSpec {
  GraphFamily family = GraphFamily::kBa;
  std::vector<NodeId> sizes{100};
  int walk_steps = 16;      // L
  int subgraph_steps = 16;  // N
  std::vector<std::uint64_t> seeds{0};
  int ba_attach = 2;
};

// One row per (size, seed, kind, step prefix).
std::vector<BenchRow> bench_actions(const BenchSpec& spec);
std::string to_csv(std::span<const BenchRow> rows);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares y = slope * x + intercept.
LineFit fit_line(std::span<const double> xs, std::span<const double> ys);

// Mean cumulative count per step prefix (1..max) over all rows of a kind.
std::vector<double> mean_curve(std::span<const BenchRow> rows, MdpKind kind);

// (curve[t] - curve[0]) / t for t >= 1: candidates per action after the
// first. The first action always scores every node, which would swamp a
// plain curve[t] / (t + 1) ratio for small t.
std::vector<double> incremental_rate(std::span<const double> curve);

bool strictly_increasing(std::span<const double> values);

}  // namespace walkex

#endif  // WALKEX_BENCH_H_
