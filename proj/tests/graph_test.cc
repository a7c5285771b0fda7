// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkex/graph.h"

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <random>

#include "oracles.h"
#include "walkex/error.h"

namespace walkex {
namespace {

using ::testing::ElementsAre;

Graph Triangle() { return Graph(3, std::vector<Edge>{{0, 1}, {1, 2}, {0, 2}}); }
Graph Path(NodeId n) {
  std::vector<Edge> e;
  for (NodeId v = 0; v + 1 < n; ++v) e.emplace_back(v, v + 1);
  return Graph(n, e);
}

std::vector<NodeId> Vec(std::span<const NodeId> s) { return {s.begin(), s.end()}; }

TEST(GraphTest, NeighborsOfTriangle) {
  EXPECT_EQ(Vec(Triangle().neighbors(1)), (std::vector<NodeId>{0, 2}));
}

TEST(GraphTest, IsolatedNodeHasNoNeighbors) {
  Graph g(4, std::vector<Edge>{{0, 1}, {1, 2}});
  EXPECT_TRUE(g.neighbors(3).empty());
}

TEST(GraphTest, PathInteriorNeighbors) {
  EXPECT_EQ(Vec(Path(4).neighbors(1)), (std::vector<NodeId>{0, 2}));
}

TEST(GraphTest, OutOfRangeNeighborQueryThrows) {
  EXPECT_THROW(Triangle().neighbors(3), InputError);
  EXPECT_THROW(Triangle().neighbors(-1), InputError);
}

TEST(GraphTest, SelfLoopRejected) {
  EXPECT_THROW(Graph(2, std::vector<Edge>{{1, 1}}), InputError);
}

TEST(GraphTest, ParallelEdgesCollapse) {
  Graph g(2, std::vector<Edge>{{0, 1}, {1, 0}, {0, 1}});
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_EQ(Vec(g.neighbors(0)), (std::vector<NodeId>{1}));
}

TEST(GraphTest, NeighborListsAreSymmetricSortedAndUnique) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto edges = oracle::edges_from_mask(9, rng() & ((1ull << 36) - 1));
    Graph g(9, edges);
    for (NodeId u = 0; u < 9; ++u) {
      const auto nu = g.neighbors(u);
      EXPECT_TRUE(std::is_sorted(nu.begin(), nu.end()));
      EXPECT_EQ(std::adjacent_find(nu.begin(), nu.end()), nu.end());
      for (NodeId v = 0; v < 9; ++v) {
        const auto nv = g.neighbors(v);
        const bool uv = std::find(nu.begin(), nu.end(), v) != nu.end();
        const bool vu = std::find(nv.begin(), nv.end(), u) != nv.end();
        EXPECT_EQ(uv, vu);
        EXPECT_EQ(uv, oracle::adjacent(edges, u, v));
      }
    }
  }
}

TEST(ConnectivityTest, Examples) {
  const Graph p = Path(3);
  const NodeId ab[] = {0, 1};
  const NodeId ac[] = {0, 2};
  EXPECT_TRUE(is_connected(p, ab));
  EXPECT_FALSE(is_connected(p, ac));
  EXPECT_TRUE(is_connected(p, std::span<const NodeId>()));
  const NodeId single[] = {2};
  EXPECT_TRUE(is_connected(p, single));
}

TEST(ConnectivityTest, OutOfRangeThrows) {
  const NodeId bad[] = {0, 7};
  EXPECT_THROW(is_connected(Path(3), bad), InputError);
}

TEST(ConnectivityTest, MatchesFloodFillOnSmallGraphs) {
  for (std::uint64_t mask = 0; mask < (1u << 10); mask += 7) {
    const auto edges = oracle::edges_from_mask(5, mask);
    Graph g(5, edges);
    for (std::uint32_t set = 0; set < 32; ++set) {
      std::vector<NodeId> nodes;
      for (NodeId v = 0; v < 5; ++v) {
        if (set >> v & 1) nodes.push_back(v);
      }
      EXPECT_EQ(is_connected(g, nodes), oracle::connected_subset(5, edges, set));
    }
  }
}

TEST(InducedSubgraphTest, Examples) {
  const NodeId all[] = {0, 1, 2};
  const NodeId two[] = {0, 1};
  EXPECT_EQ(induced_subgraph(Triangle(), all).edges.size(), 3u);
  EXPECT_EQ(induced_subgraph(Triangle(), two).edges.size(), 1u);
  const NodeId tail[] = {1, 2, 3};
  EXPECT_EQ(induced_subgraph(Path(4), tail).edges, (std::vector<Edge>{{1, 2}, {2, 3}}));
}

TEST(InducedSubgraphTest, DisconnectedSetThrows) {
  const NodeId ends[] = {0, 2};
  EXPECT_THROW(induced_subgraph(Path(3), ends), ConstraintError);
}

TEST(InducedSubgraphTest, EqualsFilteredEdgeList) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto edges = oracle::edges_from_mask(7, rng() & ((1ull << 21) - 1));
    Graph g(7, edges);
    const std::uint32_t set = rng() & 127;
    if (!oracle::connected_subset(7, edges, set)) continue;
    std::vector<NodeId> nodes;
    for (NodeId v = 0; v < 7; ++v) {
      if (set >> v & 1) nodes.push_back(v);
    }
    std::vector<Edge> expected;
    for (const auto& [u, v] : edges) {
      if ((set >> u & 1) && (set >> v & 1)) expected.emplace_back(u, v);
    }
    const auto sub = induced_subgraph(g, nodes);
    EXPECT_EQ(sub.nodes, nodes);
    EXPECT_EQ(sub.edges, expected);
  }
}

TEST(CoveringWalkTest, PathNeedsNoBacktrack) {
  const NodeId all[] = {0, 1, 2};
  EXPECT_THAT(covering_walk(Path(3), all).sequence, ElementsAre(0, 1, 2));
}

TEST(CoveringWalkTest, StarVisitsBothLeavesThroughCenter) {
  Graph star(3, std::vector<Edge>{{0, 1}, {0, 2}});
  const NodeId all[] = {0, 1, 2};
  const auto walk = covering_walk(star, all).sequence;
  EXPECT_TRUE(walk == (std::vector<NodeId>{1, 0, 2}) || walk == (std::vector<NodeId>{2, 0, 1}));
}

TEST(CoveringWalkTest, Singleton) {
  Graph g(5, std::vector<Edge>{{0, 1}});
  const NodeId one[] = {4};
  EXPECT_THAT(covering_walk(g, one).sequence, ElementsAre(4));
}

TEST(CoveringWalkTest, EmptyOrDisconnectedThrows) {
  EXPECT_THROW(covering_walk(Path(3), std::span<const NodeId>()), ConstraintError);
  const NodeId ends[] = {0, 2};
  EXPECT_THROW(covering_walk(Path(3), ends), ConstraintError);
}

// Exhaustive: all connected graphs up to 6 nodes, 50 random 7-node graphs.
TEST(CoveringWalkTest, CoversEveryConnectedSubsetOfSmallGraphs) {
  const auto result = oracle::covering_walk_sweep(50, 3);
  EXPECT_GT(result.subsets, 100000u);
  EXPECT_TRUE(result.failures.empty()) << result.failures.front();
}

TEST(FeatureMatrixTest, OneHotAndConstant) {
  const int labels[] = {1, 0, 2};
  const auto x = NodeFeatureMatrix::one_hot(labels, 3);
  EXPECT_EQ(x.values(), (Matrix{{0, 1, 0}, {1, 0, 0}, {0, 0, 1}}));
  EXPECT_EQ(NodeFeatureMatrix::constant(2).values(), (Matrix{{1}, {1}}));
  const int bad[] = {3};
  EXPECT_THROW(NodeFeatureMatrix::one_hot(bad, 3), InputError);
}

TEST(PermuteTest, RelabelsEdges) {
  const NodeId perm[] = {2, 0, 1};
  const Graph g = permute(Path(3), perm);
  EXPECT_TRUE(g.has_edge(2, 0));
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_FALSE(g.has_edge(2, 1));
}

}  // namespace
}  // namespace walkex
