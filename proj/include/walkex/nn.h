// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WALKEX_NN_H_
#define WALKEX_NN_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "walkex/autodiff.h"
#include "walkex/graph.h"

namespace walkex {

// Glorot-uniform weights, zero biases.
Matrix glorot_uniform(std::size_t fan_out, std::size_t fan_in, std::mt19937_64& rng);

// Feedforward net over row batches: Linear, ReLU, ..., Linear. Parameters
// live in a ParameterStore under "{prefix}/l{i}/W" and "{prefix}/l{i}/b";
// this object only describes them.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::string prefix, std::vector<std::size_t> dims);

  // Registers freshly initialized parameters in `store`.
  void init(ParameterStore& store, std::mt19937_64& rng) const;
  // Zeros the last layer, making the output identically zero.
  void zero_last_layer(ParameterStore& store) const;

  Var forward(Tape& t, ParameterStore& store, Var x) const;
  // Same as forward(rows.materialize(Z)), with a sparse first layer.
  Var forward_slots(Tape& t, ParameterStore& store, Var z, const SlotRows& rows) const;

  std::size_t in_dim() const { return dims_.front(); }
  std::size_t out_dim() const { return dims_.back(); }
  const std::vector<std::size_t>& dims() const { return dims_; }
  const std::string& prefix() const { return prefix_; }
  std::vector<std::string> parameter_names() const;

 private:
  std::string prefix_;
  std::vector<std::size_t> dims_;
};

// Gradient-free evaluation of a snapshot of `net` on SlotRows over a fixed
// Z. First-layer products W_slot Z(node)^T are cached on first use, so
// states that share walk prefixes are cheap to score.
class SlotMlp {
 public:
  SlotMlp(const ParameterStore& store, const Mlp& net, Matrix z, std::size_t slots);

  Matrix forward(const SlotRows& rows);  // rows x out_dim
  // Rows that all share the single row of `shared` plus one (slot, node)
  // term each; the shared part of the first layer is computed once.
  Matrix forward_shared(const SlotRows& shared, std::uint32_t slot, std::span<const NodeId> nodes);
  std::size_t slots() const { return slots_; }
  const Matrix& z() const { return z_; }

 private:
  const double* projection(std::uint32_t slot, NodeId node);
  void accumulate_row(const SlotRows& rows, std::size_t r, std::span<double> out);
  Matrix finish(Matrix h) const;

  Matrix z_;
  std::size_t slots_;
  Matrix first_;                      // first-layer W, out x in
  std::vector<Matrix> transposed_;    // later layers as W^T, in x out
  std::vector<Matrix> biases_;
  Matrix cache_;              // (slots * n) x hidden
  std::vector<char> cached_;
};

Var linear_forward(Tape& t, Var w, Var b, Var x);

struct MpnnSpec {
  int layers = 3;
  std::size_t in_dim = 1;
  std::size_t hidden_dim = 32;
  std::size_t out_dim = 32;
  double eps0 = 0.0;
  double input_scale = 1.0;  // fixed multiplier on the input features
};

// One GIN layer: row v becomes mlp((1 + eps0) h_v + sum of neighbor rows).
Var gin_layer(Tape& t, ParameterStore& store, const Graph& g, Var h, const Mlp& mlp,
              double eps0);

// Stack of GIN layers with ReLU between layers; output is n x out_dim.
// Each layer's MLP has one hidden layer of hidden_dim units.
class Mpnn {
 public:
  Mpnn() = default;
  Mpnn(std::string prefix, const MpnnSpec& spec);

  void init(ParameterStore& store, std::mt19937_64& rng) const;
  Var forward(Tape& t, ParameterStore& store, const Graph& g, const Matrix& features) const;
  Var forward(Tape& t, ParameterStore& store, const Graph& g, Var features) const;

  const MpnnSpec& spec() const { return spec_; }
  const std::vector<Mlp>& layers() const { return layers_; }
  std::vector<std::string> parameter_names() const;

 private:
  MpnnSpec spec_;
  std::vector<Mlp> layers_;
};

}  // namespace walkex

#endif  // WALKEX_NN_H_
