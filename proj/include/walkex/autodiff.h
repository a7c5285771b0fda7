// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WALKEX_AUTODIFF_H_
#define WALKEX_AUTODIFF_H_

#include <cstdint>
#include <filesystem>
#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "walkex/graph.h"
#include "walkex/matrix.h"

namespace walkex {

// A learnable tensor with its gradient and Adam moments.
struct Parameter {
  Matrix value;
  Matrix grad;  // empty until a backward pass (or zero_grad) populates it
  Matrix m;
  Matrix v;
  std::int64_t steps = 0;
};

// Named parameters, iterated in lexicographic order. Names are
// slash-separated ("theta/gin0/l1/W"); the first segment is the group.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Matrix init);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  std::vector<std::string> names() const;
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;

  void zero_grad();
  std::size_t size() const { return params_.size(); }
  bool all_finite() const;

  // FNV-1a over names, shapes and raw value bytes of the matching
  // parameters. Used to assert that a frozen group did not move.
  std::uint64_t fingerprint(const std::string& prefix = "") const;

  // Binary checkpoint, see README for the layout. Moments are not stored.
  void save(const std::filesystem::path& path) const;
  static ParameterStore load(const std::filesystem::path& path);

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Parameter> params_;
};

// Sparse description of wide input rows assembled from an embedding Z
// (n x k): row r is the sum, over its terms, of coef * Z(node, :) placed in
// column block `slot`, so rows are slots * k wide.
struct SlotTerm {
  std::uint32_t slot = 0;
  NodeId node = 0;
  double coef = 1.0;
};

struct SlotRows {
  std::size_t slots = 0;
  std::vector<std::size_t> offsets{0};  // row r owns terms[offsets[r], offsets[r + 1])
  std::vector<SlotTerm> terms;

  explicit SlotRows(std::size_t slots = 0) : slots(slots) {}
  std::size_t rows() const { return offsets.size() - 1; }
  void add(std::uint32_t slot, NodeId node, double coef = 1.0) {
    terms.push_back({slot, node, coef});
  }
  void end_row() { offsets.push_back(terms.size()); }
  // The dense rows x (slots * k) matrix the terms describe.
  Matrix materialize(const Matrix& z) const;
};

// Handle to a node on a Tape.
class Var {
 public:
  Var() = default;
  std::uint32_t id() const { return id_; }

 private:
  friend class Tape;
  explicit Var(std::uint32_t id) : id_(id) {}
  std::uint32_t id_ = 0;
};

// Linear record of a forward computation. Ops append nodes; backward()
// walks them in reverse. A tape built with record = false only computes
// values and never stores backward closures.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Leaf bound to p; repeated calls with the same parameter share one node.
  Var param(Parameter& p);

  const Matrix& value(Var v) const { return nodes_[v.id()].value; }
  // Gradient of the last backward root w.r.t. v (zeros if unreached).
  Matrix grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  // Smallest distance of any ReLU input or L1 residual from its kink seen on
  // this tape; +inf when there was none.
  double kink_margin() const { return kink_margin_; }
  void note_kink_distance(double d) { kink_margin_ = std::min(kink_margin_, d); }

  // Reverse sweep from a 1x1 root. Each parameter leaf's gradient is written
  // to Parameter::grad (overwriting).
  void backward(Var root);

  // Op plumbing.
  Var push(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var push(Matrix value, std::span<const Var> inputs, BackwardFn fn);
  // Gradient buffer of input `v`, allocated as zeros on first use.
  Matrix& grad_buffer(Var v);
  const Matrix& upstream(std::uint32_t self) const { return nodes_[self].grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };
  bool record_;
  double kink_margin_ = std::numeric_limits<double>::infinity();
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
};

// Zeros every gradient in `store`, then back-propagates from `loss`, so
// parameters the loss does not reach end with zero gradient.
void backward(Tape& tape, Var loss, ParameterStore& store);

namespace ops {

// x W^T + b for x: m x in, W: out x in, b: 1 x out.
Var linear(Tape& t, Var x, Var w, Var b);
Var matmul(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
Var relu(Tape& t, Var a);
Var square(Tape& t, Var a);
Var sum(Tape& t, Var a);  // 1 x 1

// (1 + eps0) H(v,:) + sum of H(u,:) over neighbors u of v.
Var gin_aggregate(Tape& t, const Graph& g, Var h, double eps0);

// linear(rows.materialize(Z), W, b) without building the wide input.
Var slot_linear(Tape& t, Var z, Var w, Var b, const SlotRows& rows);

Var gather_rows(Tape& t, Var a, std::span<const NodeId> rows);
Var concat_cols(Tape& t, Var a, Var b);
Var vstack(Tape& t, std::span<const Var> rows);

// Rows a(seq[0]), a(seq[1]), ... laid end to end, zero-padded to
// 1 x (slots * cols). seq.size() must be <= slots.
Var concat_rows_padded(Tape& t, Var a, std::span<const NodeId> seq, std::size_t slots);
// Mean of the selected rows as 1 x cols; zeros when `rows` is empty.
Var mean_of_rows(Tape& t, Var a, std::span<const NodeId> rows);
// Column-wise mean / max over all rows.
Var mean_rows(Tape& t, Var a);
Var max_rows(Tape& t, Var a);

// sum_i |pred_i - target_i|; the subgradient at a tie is 0.
Var l1_loss(Tape& t, Var pred, Var target);
// -log softmax(logits)[label] for 1 x C logits.
Var softmax_cross_entropy(Tape& t, Var logits, int label);

}  // namespace ops

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam on the named parameters only. Throws ContractError
// when one of them has no populated gradient.
void adam_step(ParameterStore& store, std::span<const std::string> names, double lr,
               const AdamConfig& config = {});

// Scalar objective rebuilt on a fresh tape for every evaluation.
using Objective = std::function<Var(Tape&, ParameterStore&)>;

// Central differences on every coordinate of the named parameters against
// the taped gradient. Returns the max relative error with denominator
// max(|analytic|, |numeric|, 1e-8). The store is left unchanged.
double finite_difference_check(const Objective& f, ParameterStore& store,
                               std::span<const std::string> names, double h = 1e-4);

}  // namespace walkex

#endif  // WALKEX_AUTODIFF_H_
