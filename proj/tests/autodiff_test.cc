// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkex/autodiff.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include "walkex/error.h"

namespace walkex {
namespace {

Matrix Random(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(r, c);
  for (auto& x : m.data()) x = u(rng);
  return m;
}

TEST(OpsTest, LinearIdentityPlusBias) {
  Tape t;
  Var y = ops::linear(t, t.constant(Matrix{{2, 3}}), t.constant(Matrix{{1, 0}, {0, 1}}),
                      t.constant(Matrix{{1, 1}}));
  EXPECT_EQ(t.value(y), (Matrix{{3, 4}}));
}

TEST(OpsTest, LinearZeroWeights) {
  Tape t;
  Var y = ops::linear(t, t.constant(Matrix{{2, 3}}), t.constant(Matrix(2, 2)),
                      t.constant(Matrix(1, 2)));
  EXPECT_EQ(t.value(y), Matrix(1, 2));
}

TEST(OpsTest, LinearShapeMismatch) {
  Tape t;
  EXPECT_THROW(ops::linear(t, t.constant(Matrix(1, 3)), t.constant(Matrix(3, 2)),
                           t.constant(Matrix(1, 3))),
               ContractError);
}

TEST(OpsTest, GinAggregateTriangle) {
  Graph g(3, std::vector<Edge>{{0, 1}, {1, 2}, {0, 2}});
  Tape t;
  Var y = ops::gin_aggregate(t, g, t.constant(Matrix(3, 1, 1.0)), 0.0);
  EXPECT_EQ(t.value(y), Matrix(3, 1, 3.0));
}

TEST(OpsTest, GinAggregateIsolatedNode) {
  Graph g(2, std::vector<Edge>{});
  Tape t;
  Var y = ops::gin_aggregate(t, g, t.constant(Matrix{{2.0}, {5.0}}), 0.5);
  EXPECT_EQ(t.value(y), (Matrix{{3.0}, {7.5}}));
}

TEST(OpsTest, SoftmaxCrossEntropyValues) {
  Tape t;
  EXPECT_NEAR(t.value(ops::softmax_cross_entropy(t, t.constant(Matrix{{0, 0}}), 0))[0],
              std::log(2.0), 1e-15);
  EXPECT_LT(t.value(ops::softmax_cross_entropy(t, t.constant(Matrix{{10, -10}}), 0))[0], 1e-8);
  EXPECT_THROW(ops::softmax_cross_entropy(t, t.constant(Matrix{{0, 0}}), 2), InputError);
}

TEST(OpsTest, SoftmaxCrossEntropyGradient) {
  ParameterStore store;
  store.add("x/logits", Matrix{{0, 0}});
  Tape t;
  Var loss = ops::softmax_cross_entropy(t, t.param(store.at("x/logits")), 0);
  backward(t, loss, store);
  EXPECT_EQ(store.at("x/logits").grad, (Matrix{{-0.5, 0.5}}));
}

TEST(OpsTest, L1ValuesAndSubgradient) {
  ParameterStore store;
  store.add("x/p", Matrix{{2.0, 4.0, 1.0}});
  Tape t;
  Var loss = ops::l1_loss(t, t.param(store.at("x/p")), t.constant(Matrix{{3.0, 4.0, 0.0}}));
  EXPECT_EQ(t.value(loss)[0], 2.0);
  backward(t, loss, store);
  EXPECT_EQ(store.at("x/p").grad, (Matrix{{-1.0, 0.0, 1.0}}));
}

TEST(BackwardTest, SquareAtThree) {
  ParameterStore store;
  store.add("x/theta", Matrix{{3.0}});
  Tape t;
  backward(t, ops::square(t, t.param(store.at("x/theta"))), store);
  EXPECT_EQ(store.at("x/theta").grad, (Matrix{{6.0}}));
}

TEST(BackwardTest, SumOfLinearGivesRowSumsOfW) {
  ParameterStore store;
  store.add("x/in", Matrix{{0.3, -0.2, 0.9}});
  const Matrix w{{1, 2, 3}, {-1, 0.5, 4}};
  Tape t;
  Var y = ops::linear(t, t.param(store.at("x/in")), t.constant(w), t.constant(Matrix(1, 2)));
  backward(t, ops::sum(t, y), store);
  EXPECT_EQ(store.at("x/in").grad, (Matrix{{0.0, 2.5, 7.0}}));
}

TEST(BackwardTest, UnreachedParameterGetsZeroGradient) {
  ParameterStore store;
  store.add("x/a", Matrix{{1.0}});
  store.add("x/b", Matrix{{1.0, 2.0}});
  Tape t;
  backward(t, ops::square(t, t.param(store.at("x/a"))), store);
  EXPECT_EQ(store.at("x/b").grad, Matrix(1, 2));
}

TEST(BackwardTest, NonScalarRootRejected) {
  ParameterStore store;
  Tape t;
  Var v = t.constant(Matrix(1, 2));
  EXPECT_THROW(backward(t, v, store), ContractError);
}

TEST(BackwardTest, NonRecordingTapeRejected) {
  ParameterStore store;
  Tape t(false);
  EXPECT_THROW(backward(t, t.constant(Matrix(1, 1)), store), ContractError);
}

TEST(AdamTest, FirstStepClosedForm) {
  ParameterStore store;
  store.add("x/p", Matrix{{0.5}});
  store.at("x/p").grad = Matrix{{1.0}};
  const std::vector<std::string> names{"x/p"};
  adam_step(store, names, 1e-3);
  // m_hat = g, v_hat = g^2 after bias correction.
  EXPECT_DOUBLE_EQ(store.at("x/p").value[0], 0.5 - 1e-3 * 1.0 / (1.0 + 1e-8));
}

TEST(AdamTest, ZeroGradientLeavesValue) {
  ParameterStore store;
  store.add("x/p", Matrix{{0.5, -2.0}});
  store.at("x/p").grad = Matrix(1, 2);
  const std::vector<std::string> names{"x/p"};
  adam_step(store, names, 1e-3);
  EXPECT_EQ(store.at("x/p").value, (Matrix{{0.5, -2.0}}));
}

TEST(AdamTest, DisjointSubsetUntouched) {
  std::mt19937_64 rng(3);
  ParameterStore store;
  store.add("phi/W", Random(3, 4, rng));
  store.add("theta_out/W", Random(2, 2, rng));
  store.zero_grad();
  store.at("phi/W").grad = Random(3, 4, rng);
  store.at("theta_out/W").grad = Random(2, 2, rng);
  const auto before = store.fingerprint("theta_out/");
  const Matrix phi_before = store.at("phi/W").value;
  const std::vector<std::string> names{"phi/W"};
  adam_step(store, names, 1e-2);
  EXPECT_EQ(store.fingerprint("theta_out/"), before);
  EXPECT_NE(store.at("phi/W").value, phi_before);
}

TEST(AdamTest, MissingGradientRejected) {
  ParameterStore store;
  store.add("x/p", Matrix{{0.5}});
  const std::vector<std::string> names{"x/p"};
  EXPECT_THROW(adam_step(store, names, 1e-3), ContractError);
}

TEST(FiniteDifferenceTest, Quadratic) {
  ParameterStore store;
  store.add("x/theta", Matrix{{3.0}});
  const std::vector<std::string> names{"x/theta"};
  const double err = finite_difference_check(
      [](Tape& t, ParameterStore& s) { return ops::square(t, t.param(s.at("x/theta"))); }, store,
      names, 1e-4);
  EXPECT_LT(err, 1e-6);
  EXPECT_EQ(store.at("x/theta").value[0], 3.0);
}

TEST(FiniteDifferenceTest, ConstantFunctionHasZeroError) {
  ParameterStore store;
  store.add("x/theta", Matrix{{3.0}});
  const std::vector<std::string> names{"x/theta"};
  const double err = finite_difference_check(
      [](Tape& t, ParameterStore&) { return t.constant(Matrix{{7.0}}); }, store, names);
  EXPECT_EQ(err, 0.0);
}

TEST(FiniteDifferenceTest, ComposedOps) {
  std::mt19937_64 rng(11);
  ParameterStore store;
  store.add("x/W", Random(3, 4, rng));
  store.add("x/b", Random(1, 3, rng));
  store.add("x/in", Random(5, 4, rng));
  const std::vector<std::string> names{"x/W", "x/b", "x/in"};
  const Graph g(5, std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}, {1, 3}});
  const std::vector<NodeId> seq{2, 0, 4};
  const double err = finite_difference_check(
      [&](Tape& t, ParameterStore& s) {
        Var h = ops::gin_aggregate(t, g, t.param(s.at("x/in")), 0.25);
        Var y = ops::linear(t, h, t.param(s.at("x/W")), t.param(s.at("x/b")));
        Var wide = ops::concat_rows_padded(t, y, seq, 4);
        Var m = ops::mean_of_rows(t, y, seq);
        Var both = ops::concat_cols(t, wide, m);
        return ops::sum(t, ops::square(t, both));
      },
      store, names);
  EXPECT_LT(err, 1e-6);
}

TEST(SlotLinearTest, MatchesDenseLinearValueAndGradient) {
  std::mt19937_64 rng(5);
  const std::size_t n = 6, k = 3, slots = 4, out = 5;
  ParameterStore store;
  store.add("x/z", Random(n, k, rng));
  store.add("x/W", Random(out, slots * k, rng));
  store.add("x/b", Random(1, out, rng));

  SlotRows rows(slots);
  rows.add(0, 2, 1.0);
  rows.add(1, 4, 1.0);
  rows.add(3, 2, 1.0);
  rows.end_row();
  rows.add(0, 2, 0.5);
  rows.add(0, 1, 0.5);
  rows.add(2, 5, -1.5);
  rows.end_row();
  rows.end_row();  // empty row gives the bias alone

  auto run = [&](bool sparse) {
    Tape t;
    Var z = t.param(store.at("x/z"));
    Var w = t.param(store.at("x/W"));
    Var b = t.param(store.at("x/b"));
    Var y = sparse ? ops::slot_linear(t, z, w, b, rows)
                   : ops::linear(t, t.constant(rows.materialize(t.value(z))), w, b);
    Matrix value = t.value(y);
    Var loss = ops::sum(t, ops::square(t, y));
    backward(t, loss, store);
    return std::array<Matrix, 3>{value, store.at("x/W").grad, store.at("x/b").grad};
  };
  const auto dense = run(false);
  const auto sparse = run(true);
  for (int i = 0; i < 3; ++i) {
    ASSERT_TRUE(dense[i].same_shape(sparse[i]));
    for (std::size_t j = 0; j < dense[i].size(); ++j) {
      EXPECT_NEAR(dense[i][j], sparse[i][j], 1e-12) << i << " " << j;
    }
  }
  for (std::size_t c = 0; c < out; ++c) EXPECT_DOUBLE_EQ(dense[0](2, c), store.at("x/b").value[c]);

  const std::vector<std::string> names{"x/z", "x/W", "x/b"};
  const double err = finite_difference_check(
      [&](Tape& t, ParameterStore& s) {
        Var y = ops::slot_linear(t, t.param(s.at("x/z")), t.param(s.at("x/W")),
                                 t.param(s.at("x/b")), rows);
        return ops::sum(t, ops::square(t, y));
      },
      store, names);
  EXPECT_LT(err, 1e-6);
}

TEST(SlotRowsTest, MaterializePlacesBlocks) {
  const Matrix z{{1, 2}, {3, 4}};
  SlotRows rows(2);
  rows.add(1, 0, 2.0);
  rows.add(0, 1, 1.0);
  rows.end_row();
  EXPECT_EQ(rows.materialize(z), (Matrix{{3, 4, 2, 4}}));
}

TEST(CheckpointTest, RoundTripIsBitExact) {
  std::mt19937_64 rng(8);
  ParameterStore store;
  store.add("theta/gin0/l0/W", Random(4, 3, rng));
  store.add("phi/l1/b", Random(1, 7, rng));
  store.at("phi/l1/b").value[2] = -0.0;
  store.at("phi/l1/b").value[3] = 1e-310;
  const auto path = std::filesystem::temp_directory_path() /
                    ("walkex_ckpt_" + std::to_string(::getpid()) + ".ckpt");
  store.save(path);
  const ParameterStore back = ParameterStore::load(path);
  EXPECT_EQ(back.names(), store.names());
  EXPECT_EQ(back.fingerprint(), store.fingerprint());
  for (const auto& name : store.names()) EXPECT_EQ(back.at(name).value, store.at(name).value);
  EXPECT_TRUE(std::signbit(back.at("phi/l1/b").value[2]));

  std::ifstream in(path, std::ios::binary);
  char magic[8];
  in.read(magic, 8);
  EXPECT_EQ(std::string(magic, 8), "WLKXCKPT");
  std::filesystem::remove(path);
}

TEST(CheckpointTest, RejectsForeignFile) {
  const auto path = std::filesystem::temp_directory_path() /
                    ("walkex_bad_" + std::to_string(::getpid()) + ".ckpt");
  std::ofstream(path, std::ios::binary) << "not a checkpoint";
  EXPECT_THROW(ParameterStore::load(path), ParseError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace walkex
