// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkex/mdp.h"

#include <gtest/gtest.h>

#include <random>

#include "json.hpp"
#include "oracles.h"
#include "walkex/error.h"

namespace walkex {
namespace {

const EnvConfig kWalk{MdpKind::kWalkExploration, 3};
const EnvConfig kSub{MdpKind::kSubgraphGeneration, 4};

Graph Path(NodeId n) {
  std::vector<Edge> e;
  for (NodeId v = 0; v + 1 < n; ++v) e.emplace_back(v, v + 1);
  return Graph(n, e);
}

Graph Complete(NodeId n) {
  std::vector<Edge> e;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) e.emplace_back(u, v);
  }
  return Graph(n, e);
}

EnvState Walk(const Graph& g, std::vector<NodeId> seq, const EnvConfig& cfg = kWalk) {
  EnvState s = initial_state(g, 0, cfg);
  for (NodeId a : seq) s = apply_action(g, s, a);
  return s;
}

EnvState Sub(const Graph& g, std::vector<NodeId> order, const EnvConfig& cfg = kSub) {
  EnvState s = initial_state(g, 0, cfg);
  for (NodeId a : order) s = apply_action(g, s, a);
  return s;
}

TEST(MdpTest, InitialStates) {
  const Graph g = Path(3);
  const EnvState w = initial_state(g, 4, kWalk);
  EXPECT_TRUE(w.walk.sequence.empty());
  EXPECT_EQ(w.graph_index, 4u);
  EXPECT_EQ(w.step, 0);
  const EnvState s = initial_state(g, 0, kSub);
  EXPECT_TRUE(s.subgraph.nodes.empty());
  EXPECT_TRUE(s.subgraph.edges.empty());
  EXPECT_EQ(feasible_actions(g, w), (std::vector<NodeId>{0, 1, 2}));
  EXPECT_EQ(feasible_actions(g, s), (std::vector<NodeId>{0, 1, 2}));
  EXPECT_FALSE(is_terminal(g, w, kWalk));
  EXPECT_THROW(initial_state(Graph(0, std::vector<Edge>{}), 0, kWalk), InputError);
}

TEST(MdpTest, FeasibleActionExamples) {
  EXPECT_EQ(feasible_actions(Path(3), Walk(Path(3), {1})), (std::vector<NodeId>{0, 2}));
  EXPECT_EQ(feasible_actions(Path(4), Sub(Path(4), {1, 2})), (std::vector<NodeId>{0, 3}));
  const EnvState full = Sub(Complete(4), {0, 1, 2, 3}, {MdpKind::kSubgraphGeneration, 9});
  EXPECT_TRUE(feasible_actions(Complete(4), full).empty());
  EXPECT_TRUE(is_terminal(Complete(4), full, {MdpKind::kSubgraphGeneration, 9}));
}

TEST(MdpTest, TransitionExamples) {
  EXPECT_EQ(Walk(Path(3), {0, 1, 2}).walk.sequence, (std::vector<NodeId>{0, 1, 2}));
  EXPECT_EQ(Walk(Path(3), {0, 1, 0}).walk.sequence, (std::vector<NodeId>{0, 1, 0}));
  const EnvState tri = Sub(Complete(3), {0, 1, 2});
  EXPECT_EQ(tri.subgraph.nodes, (std::vector<NodeId>{0, 1, 2}));
  EXPECT_EQ(tri.subgraph.edges, (std::vector<Edge>{{0, 1}, {0, 2}, {1, 2}}));
  EXPECT_THROW(apply_action(Path(3), Walk(Path(3), {0}), 2), ContractError);
  EXPECT_THROW(apply_action(Path(3), Sub(Path(3), {0}), 0), ContractError);
}

TEST(MdpTest, WalkTerminatesAtMaxLength) {
  const EnvState s = Walk(Path(3), {0, 1, 2});
  EXPECT_TRUE(is_terminal(Path(3), s, kWalk));
  EXPECT_FALSE(is_terminal(Path(3), Walk(Path(3), {0, 1}), kWalk));
}

TEST(MdpTest, ExhaustiveOracleOnSmallGraphs) {
  const auto result = oracle::mdp_sweep(4);
  EXPECT_GT(result.graphs, 10000u);
  EXPECT_GT(result.walk_states, 0u);
  EXPECT_TRUE(result.failures.empty()) << result.failures.front();
}

TEST(EncodeTest, SubgraphMean) {
  const Graph g = Path(2);
  const Matrix z{{1, 3}, {3, 1}};
  const EnvState s = Sub(g, {0, 1}, {MdpKind::kSubgraphGeneration, 2});
  EXPECT_EQ(encode_state(z, s, {MdpKind::kSubgraphGeneration, 2}), (Matrix{{2, 2}}));
}

TEST(EncodeTest, WalkPaddedToLk) {
  const Graph g = Path(3);
  const Matrix z{{1, 2}, {3, 4}, {5, 6}};
  EXPECT_EQ(encode_state(z, Walk(g, {0}), kWalk), (Matrix{{1, 2, 0, 0, 0, 0}}));
  EXPECT_EQ(encode_state(z, initial_state(g, 0, kWalk), kWalk), Matrix(1, 6));
  EXPECT_EQ(encode_state(z, Walk(g, {1, 0, 1}), kWalk), (Matrix{{3, 4, 1, 2, 3, 4}}));
  EXPECT_EQ(state_encoding_dim(kWalk, 2), 6u);
  EXPECT_EQ(state_encoding_dim(kSub, 2), 2u);
  EXPECT_THROW(encode_state(Matrix(2, 2), Walk(g, {2}), kWalk), ContractError);
}

TEST(EncodeTest, WalkDimensionAndZeroSuffix) {
  std::mt19937_64 rng(2);
  const NodeId n = 8;
  std::vector<Edge> e;
  for (NodeId v = 1; v < n; ++v) e.emplace_back(static_cast<NodeId>(rng() % v), v);
  const Graph g(n, e);
  Matrix z(n, 5);
  for (auto& x : z.data()) x = std::uniform_real_distribution<double>(0.5, 1.0)(rng);
  const EnvConfig cfg{MdpKind::kWalkExploration, 16};
  for (int trial = 0; trial < 50; ++trial) {
    EnvState s = initial_state(g, 0, cfg);
    const int len = static_cast<int>(rng() % 17);
    for (int i = 0; i < len && !is_terminal(g, s, cfg); ++i) {
      const auto acts = feasible_actions(g, s);
      s = apply_action(g, s, acts[rng() % acts.size()]);
    }
    const Matrix enc = encode_state(z, s, cfg);
    ASSERT_EQ(enc.cols(), 16u * 5u);
    const std::size_t used = s.walk.sequence.size() * 5;
    for (std::size_t c = 0; c < enc.cols(); ++c) {
      if (c < used) {
        EXPECT_NE(enc[c], 0.0);
      } else {
        EXPECT_EQ(enc[c], 0.0);
      }
    }
  }
}

TEST(EncodeTest, SubgraphOrderInvariance) {
  const Graph g = Complete(5);
  Matrix z(5, 3);
  std::mt19937_64 rng(9);
  for (auto& x : z.data()) x = std::uniform_real_distribution<double>(-1, 1)(rng);
  const EnvConfig cfg{MdpKind::kSubgraphGeneration, 5};
  const Matrix a = encode_state(z, Sub(g, {4, 0, 2}, cfg), cfg);
  const Matrix b = encode_state(z, Sub(g, {2, 4, 0}, cfg), cfg);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(a[c], b[c], 1e-15);
}

TEST(EncodeTest, TapedEncodingMatchesSlotTerms) {
  const Graph g = Path(4);
  const Matrix z{{1, 2}, {3, 4}, {5, 6}, {7, 8}};
  const EnvConfig cfg{MdpKind::kWalkExploration, 4};
  for (const auto& seq : {std::vector<NodeId>{}, {2}, {1, 2, 1}, {0, 1, 2, 3}}) {
    const EnvState s = Walk(g, seq, cfg);
    Tape t;
    const Matrix taped = t.value(encode_state(t, t.constant(z), s, cfg));
    SlotRows rows(state_slots(cfg));
    append_state_terms(s, cfg, 1.0, rows);
    rows.end_row();
    EXPECT_EQ(taped, rows.materialize(z));
    EXPECT_EQ(taped, encode_state(z, s, cfg));
  }
  const EnvConfig sub{MdpKind::kSubgraphGeneration, 4};
  const EnvState s = Sub(g, {1, 2, 3}, sub);
  SlotRows rows(state_slots(sub));
  append_state_terms(s, sub, 1.0, rows);
  rows.end_row();
  const Matrix m = rows.materialize(z);
  EXPECT_NEAR(m[0], 5.0, 1e-15);
  EXPECT_NEAR(m[1], 6.0, 1e-15);
}

TEST(RewardTest, LossDifference) {
  const Graph g = Path(3);
  const EnvState s = Walk(g, {0});
  const EnvState s2 = apply_action(g, s, 1);
  const RewardEvaluator ev = [](const EnvState& st) { return st.step == 1 ? 0.9 : 0.4; };
  EXPECT_DOUBLE_EQ(reward(s, 1, s2, ev), 0.5);
  const RewardEvaluator flat = [](const EnvState&) { return 0.3; };
  EXPECT_EQ(reward(s, 1, s2, flat), 0.0);
}

TEST(RewardTest, Telescoping) {
  std::mt19937_64 rng(4);
  const Graph g = Complete(6);
  const RewardEvaluator ev = [](const EnvState& st) {
    double h = 0.1;
    for (NodeId v : st.nodes()) h = h * 1.7 + 0.3 * v;
    return std::sin(h);
  };
  const EnvConfig cfg{MdpKind::kWalkExploration, 10};
  for (int trial = 0; trial < 20; ++trial) {
    EnvState s = initial_state(g, 0, cfg);
    const EnvState start = s;
    double total = 0.0;
    while (!is_terminal(g, s, cfg)) {
      const auto acts = feasible_actions(g, s);
      const NodeId a = acts[rng() % acts.size()];
      const EnvState next = apply_action(g, s, a);
      total += reward(s, a, next, ev);
      s = next;
    }
    EXPECT_NEAR(total, ev(start) - ev(s), 1e-12);
  }
}

TEST(ExportTest, DotGolden) {
  const Graph g = Path(3);
  const EnvState s = Walk(g, {0, 1});
  EXPECT_EQ(to_dot(g, s, "g0"),
            "graph \"g0\" {\n"
            "  node [shape=circle, style=filled, fillcolor=\"#dddddd\"];\n"
            "  0 [fillcolor=\"#e4572e\", extracted=true];\n"
            "  1 [fillcolor=\"#e4572e\", extracted=true];\n"
            "  2;\n"
            "  0 -- 1 [color=\"#e4572e\", penwidth=3, extracted=true];\n"
            "  1 -- 2;\n"
            "}\n");
}

TEST(ExportTest, StateEdges) {
  const Graph g = Complete(4);
  EXPECT_EQ(state_edges(Walk(g, {2, 0, 2, 1}, {MdpKind::kWalkExploration, 4})),
            (std::vector<Edge>{{0, 2}, {1, 2}}));
  EXPECT_EQ(state_edges(Sub(g, {3, 1})), (std::vector<Edge>{{1, 3}}));
}

TEST(ExportTest, JsonRecord) {
  const Graph g = Path(3);
  const std::vector<double> q{0.5, -1.0};
  const auto w = nlohmann::json::parse(to_json_record(Walk(g, {1, 0, 1}), q));
  EXPECT_EQ(w["kind"], "walk");
  EXPECT_EQ(w["walk"], (std::vector<int>{1, 0, 1}));
  EXPECT_EQ(w["nodes"], (std::vector<int>{0, 1}));
  EXPECT_EQ(w["q_values"], q);
  const auto s = nlohmann::json::parse(to_json_record(Sub(g, {0, 1}), q));
  EXPECT_EQ(s["kind"], "subgraph");
  EXPECT_EQ(s["edges"], nlohmann::json::parse("[[0, 1]]"));
}

TEST(MdpKindTest, ParseRoundTrip) {
  EXPECT_EQ(parse_mdp_kind("walk"), MdpKind::kWalkExploration);
  EXPECT_EQ(parse_mdp_kind(to_string(MdpKind::kSubgraphGeneration)),
            MdpKind::kSubgraphGeneration);
  EXPECT_THROW(parse_mdp_kind("tree"), InputError);
}

}  // namespace
}  // namespace walkex
