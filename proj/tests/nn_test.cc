// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkex/nn.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "walkex/dataset.h"
#include "walkex/error.h"

namespace walkex {
namespace {

Graph RandomConnected(NodeId n, std::mt19937_64& rng) {
  std::mt19937_64 local(rng());
  return Graph(n, barabasi_albert_edges(n, 2, local));
}

Matrix OneHot(NodeId n, int d, std::mt19937_64& rng) {
  std::vector<int> labels(n);
  for (auto& l : labels) l = static_cast<int>(rng() % d);
  return NodeFeatureMatrix::one_hot(labels, d).values();
}

TEST(MlpTest, GlorotBoundsAndZeroBiases) {
  std::mt19937_64 rng(0);
  ParameterStore store;
  Mlp mlp("m", {10, 6, 2});
  mlp.init(store, rng);
  const double bound = std::sqrt(6.0 / 16.0);
  for (double w : store.at("m/l0/W").value.data()) EXPECT_LE(std::abs(w), bound);
  EXPECT_EQ(store.at("m/l0/W").value.rows(), 6u);
  EXPECT_EQ(store.at("m/l0/b").value, Matrix(1, 6));
  EXPECT_EQ(store.at("m/l1/b").value, Matrix(1, 2));
}

TEST(MlpTest, SingleLayerEqualsLinear) {
  std::mt19937_64 rng(1);
  ParameterStore store;
  Mlp mlp("m", {3, 2});
  mlp.init(store, rng);
  store.at("m/l0/b").value = Matrix{{0.1, -0.2}};
  Tape t;
  Var x = t.constant(Matrix{{1, -2, 0.5}});
  const Matrix a = t.value(mlp.forward(t, store, x));
  const Matrix b = t.value(linear_forward(t, t.param(store.at("m/l0/W")),
                                          t.param(store.at("m/l0/b")), x));
  EXPECT_EQ(a, b);
}

TEST(MlpTest, ZeroInputZeroBiasGivesZero) {
  std::mt19937_64 rng(2);
  ParameterStore store;
  Mlp mlp("m", {4, 8, 3});
  mlp.init(store, rng);
  Tape t;
  const Matrix y = t.value(mlp.forward(t, store, t.constant(Matrix(1, 4))));
  EXPECT_EQ(y, Matrix(1, 3));
}

TEST(MlpTest, ForwardSlotsMatchesDense) {
  std::mt19937_64 rng(3);
  ParameterStore store;
  Mlp mlp("m", {3 * 4, 6, 2});
  mlp.init(store, rng);
  store.at("m/l0/b").value = Matrix(1, 6, 0.05);
  Matrix z(5, 4);
  for (auto& v : z.data()) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  SlotRows rows(3);
  rows.add(0, 4, 1.0);
  rows.add(1, 0, 1.0);
  rows.end_row();
  rows.add(2, 3, 0.5);
  rows.add(0, 3, 0.5);
  rows.end_row();

  Tape t;
  const Matrix dense = t.value(mlp.forward(t, store, t.constant(rows.materialize(z))));
  const Matrix sparse = t.value(mlp.forward_slots(t, store, t.constant(z), rows));
  SlotMlp snapshot(store, mlp, z, 3);
  const Matrix cached = snapshot.forward(rows);
  ASSERT_TRUE(dense.same_shape(sparse));
  for (std::size_t i = 0; i < dense.size(); ++i) {
    EXPECT_NEAR(dense[i], sparse[i], 1e-12);
    EXPECT_NEAR(dense[i], cached[i], 1e-12);
  }

  // Each of nodes {1, 2} appended in slot 1 after a shared slot-0 prefix.
  SlotRows shared(3);
  shared.add(0, 4, 1.0);
  shared.end_row();
  const std::vector<NodeId> nodes{1, 2};
  const Matrix fanned = snapshot.forward_shared(shared, 1, nodes);
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    SlotRows one(3);
    one.add(0, 4, 1.0);
    one.add(1, nodes[r], 1.0);
    one.end_row();
    const Matrix expect = t.value(mlp.forward(t, store, t.constant(one.materialize(z))));
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(fanned(r, c), expect(0, c), 1e-12);
  }
}

TEST(GinLayerTest, IdentityMlpOnTriangle) {
  ParameterStore store;
  Mlp mlp("g", {1, 1, 1});
  store.add("g/l0/W", Matrix{{1.0}});
  store.add("g/l0/b", Matrix{{0.0}});
  store.add("g/l1/W", Matrix{{1.0}});
  store.add("g/l1/b", Matrix{{0.0}});
  Graph g(3, std::vector<Edge>{{0, 1}, {1, 2}, {0, 2}});
  Tape t;
  const Matrix y = t.value(gin_layer(t, store, g, t.constant(Matrix(3, 1, 1.0)), mlp, 0.0));
  EXPECT_EQ(y, Matrix(3, 1, 3.0));
}

TEST(GinLayerTest, RowCountMismatch) {
  ParameterStore store;
  std::mt19937_64 rng(0);
  Mlp mlp("g", {1, 2, 1});
  mlp.init(store, rng);
  Graph g(3, std::vector<Edge>{{0, 1}});
  Tape t;
  EXPECT_THROW(gin_layer(t, store, g, t.constant(Matrix(2, 1)), mlp, 0.0), ContractError);
}

TEST(MpnnTest, OutputShape) {
  std::mt19937_64 rng(4);
  ParameterStore store;
  Mpnn net("theta", {3, 2, 8, 4, 0.0, 1.0});
  net.init(store, rng);
  Graph g = RandomConnected(7, rng);
  Tape t;
  const Matrix z = t.value(net.forward(t, store, g, OneHot(7, 2, rng)));
  EXPECT_EQ(z.rows(), 7u);
  EXPECT_EQ(z.cols(), 4u);
  EXPECT_THROW(net.forward(t, store, g, Matrix(7, 3)), ContractError);
}

TEST(MpnnTest, OneLayerIsGinLayer) {
  std::mt19937_64 rng(5);
  ParameterStore store;
  Mpnn net("theta", {1, 2, 8, 4, 0.0, 1.0});
  net.init(store, rng);
  Graph g = RandomConnected(6, rng);
  const Matrix x = OneHot(6, 2, rng);
  Tape t;
  EXPECT_EQ(t.value(net.forward(t, store, g, x)),
            t.value(gin_layer(t, store, g, t.constant(x), net.layers()[0], 0.0)));
}

TEST(MpnnTest, InputScaleMultipliesFeatures) {
  std::mt19937_64 rng(6);
  ParameterStore store;
  Mpnn scaled("theta", {2, 2, 8, 4, 0.0, 0.1});
  scaled.init(store, rng);
  Mpnn plain("theta", {2, 2, 8, 4, 0.0, 1.0});
  Graph g = RandomConnected(6, rng);
  Matrix x = OneHot(6, 2, rng);
  Tape t;
  const Matrix a = t.value(scaled.forward(t, store, g, x));
  for (auto& v : x.data()) v *= 0.1;
  const Matrix b = t.value(plain.forward(t, store, g, x));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
}

TEST(MpnnTest, PermutationEquivariance) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    ParameterStore store;
    Mpnn net("theta", {3, 3, 16, 8, 0.0, 1.0});
    net.init(store, rng);
    for (const auto& name : store.names()) {
      for (auto& v : store.at(name).value.data()) {
        if (name.back() == 'b') v = std::uniform_real_distribution<double>(-0.1, 0.1)(rng);
      }
    }
    const NodeId n = 9;
    Graph g = RandomConnected(n, rng);
    const Matrix x = OneHot(n, 3, rng);
    std::vector<NodeId> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Graph pg = permute(g, perm);
    Matrix px(n, 3);
    for (NodeId v = 0; v < n; ++v) {
      for (std::size_t c = 0; c < 3; ++c) px(perm[v], c) = x(v, c);
    }
    Tape t;
    const Matrix z = t.value(net.forward(t, store, g, x));
    const Matrix pz = t.value(net.forward(t, store, pg, px));
    for (NodeId v = 0; v < n; ++v) {
      for (std::size_t c = 0; c < z.cols(); ++c) {
        EXPECT_NEAR(pz(perm[v], c), z(v, c), 1e-10) << "seed " << seed;
      }
    }
  }
}

TEST(MpnnTest, DeterministicInit) {
  auto build = [] {
    std::mt19937_64 rng(42);
    ParameterStore store;
    Mpnn("theta", {3, 2, 8, 4, 0.0, 1.0}).init(store, rng);
    return store.fingerprint();
  };
  EXPECT_EQ(build(), build());
}

}  // namespace
}  // namespace walkex
