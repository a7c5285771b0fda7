// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkex/nn.h"

#include <algorithm>
#include <cmath>

#include "walkex/error.h"

namespace walkex {

Matrix glorot_uniform(std::size_t fan_out, std::size_t fan_in, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix w(fan_out, fan_in);
  for (auto& x : w.data()) x = dist(rng);
  return w;
}

Mlp::Mlp(std::string prefix, std::vector<std::size_t> dims)
    : prefix_(std::move(prefix)), dims_(std::move(dims)) {
  if (dims_.size() < 2) throw ContractError("Mlp: need at least input and output dims");
  for (auto d : dims_) {
    if (d == 0) throw ContractError("Mlp: dimensions must be positive");
  }
}

void Mlp::init(ParameterStore& store, std::mt19937_64& rng) const {
  for (std::size_t i = 0; i + 1 < dims_.size(); ++i) {
    const std::string base = prefix_ + "/l" + std::to_string(i);
    store.add(base + "/W", glorot_uniform(dims_[i + 1], dims_[i], rng));
    store.add(base + "/b", Matrix(1, dims_[i + 1]));
  }
}

void Mlp::zero_last_layer(ParameterStore& store) const {
  const std::string base = prefix_ + "/l" + std::to_string(dims_.size() - 2);
  store.at(base + "/W").value.fill(0.0);
  store.at(base + "/b").value.fill(0.0);
}

std::vector<std::string> Mlp::parameter_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i + 1 < dims_.size(); ++i) {
    const std::string base = prefix_ + "/l" + std::to_string(i);
    out.push_back(base + "/W");
    out.push_back(base + "/b");
  }
  return out;
}

Var linear_forward(Tape& t, Var w, Var b, Var x) { return ops::linear(t, x, w, b); }

Var Mlp::forward(Tape& t, ParameterStore& store, Var x) const {
  if (t.value(x).cols() != in_dim()) {
    throw ContractError("Mlp '" + prefix_ + "': input has " + std::to_string(t.value(x).cols()) +
                        " columns, expected " + std::to_string(in_dim()));
  }
  Var h = x;
  for (std::size_t i = 0; i + 1 < dims_.size(); ++i) {
    const std::string base = prefix_ + "/l" + std::to_string(i);
    h = ops::linear(t, h, t.param(store.at(base + "/W")), t.param(store.at(base + "/b")));
    if (i + 2 < dims_.size()) h = ops::relu(t, h);
  }
  return h;
}

Var Mlp::forward_slots(Tape& t, ParameterStore& store, Var z, const SlotRows& rows) const {
  if (rows.slots * t.value(z).cols() != in_dim()) {
    throw ContractError("Mlp '" + prefix_ + "': slot layout is " +
                        std::to_string(rows.slots * t.value(z).cols()) + " wide, expected " +
                        std::to_string(in_dim()));
  }
  Var h;
  for (std::size_t i = 0; i + 1 < dims_.size(); ++i) {
    const std::string base = prefix_ + "/l" + std::to_string(i);
    Var w = t.param(store.at(base + "/W"));
    Var b = t.param(store.at(base + "/b"));
    h = i == 0 ? ops::slot_linear(t, z, w, b, rows) : ops::linear(t, h, w, b);
    if (i + 2 < dims_.size()) h = ops::relu(t, h);
  }
  return h;
}

SlotMlp::SlotMlp(const ParameterStore& store, const Mlp& net, Matrix z, std::size_t slots)
    : z_(std::move(z)), slots_(slots) {
  if (slots_ * z_.cols() != net.in_dim()) {
    throw ContractError("SlotMlp: slot layout does not match the input of '" + net.prefix() + "'");
  }
  const auto names = net.parameter_names();
  for (std::size_t i = 0; i < names.size(); i += 2) {
    const Matrix& w = store.at(names[i]).value;
    if (i == 0) {
      first_ = w;
    } else {
      Matrix wt(w.cols(), w.rows());
      for (std::size_t o = 0; o < w.rows(); ++o) {
        for (std::size_t c = 0; c < w.cols(); ++c) wt(c, o) = w(o, c);
      }
      transposed_.push_back(std::move(wt));
    }
    biases_.push_back(store.at(names[i + 1]).value);
  }
  cache_ = Matrix(slots_ * z_.rows(), first_.rows());
  cached_.assign(slots_ * z_.rows(), 0);
}

const double* SlotMlp::projection(std::uint32_t slot, NodeId node) {
  if (slot >= slots_ || node < 0 || static_cast<std::size_t>(node) >= z_.rows()) {
    throw ContractError("SlotMlp: term outside the slot layout or embedding");
  }
  const std::size_t key = slot * z_.rows() + static_cast<std::size_t>(node);
  double* dst = &cache_.data()[key * cache_.cols()];
  if (!cached_[key]) {
    const std::size_t k = z_.cols();
    const double* zr = &z_.data()[static_cast<std::size_t>(node) * k];
    for (std::size_t o = 0; o < first_.rows(); ++o) {
      const double* wo = &first_.data()[o * first_.cols() + slot * k];
      double acc = 0.0;
      for (std::size_t c = 0; c < k; ++c) acc += wo[c] * zr[c];
      dst[o] = acc;
    }
    cached_[key] = 1;
  }
  return dst;
}

void SlotMlp::accumulate_row(const SlotRows& rows, std::size_t r, std::span<double> out) {
  for (std::size_t i = rows.offsets[r]; i < rows.offsets[r + 1]; ++i) {
    const SlotTerm& term = rows.terms[i];
    const double* p = projection(term.slot, term.node);
    for (std::size_t o = 0; o < out.size(); ++o) out[o] += term.coef * p[o];
  }
}

Matrix SlotMlp::finish(Matrix h) const {
  const std::size_t m = h.rows();
  for (std::size_t l = 0; l < transposed_.size(); ++l) {
    for (auto& x : h.data()) x = x > 0.0 ? x : 0.0;
    const Matrix& wt = transposed_[l];
    const Matrix& b = biases_[l + 1];
    Matrix next(m, wt.cols());
    for (std::size_t r = 0; r < m; ++r) {
      double* dst = &next.data()[r * wt.cols()];
      std::copy(b.data().begin(), b.data().end(), dst);
      const double* hr = &h.data()[r * wt.rows()];
      for (std::size_t c = 0; c < wt.rows(); ++c) {
        const double x = hr[c];
        if (x == 0.0) continue;
        const double* wc = &wt.data()[c * wt.cols()];
        for (std::size_t o = 0; o < wt.cols(); ++o) dst[o] += x * wc[o];
      }
    }
    h = std::move(next);
  }
  return h;
}

Matrix SlotMlp::forward(const SlotRows& rows) {
  if (rows.slots != slots_) throw ContractError("SlotMlp: slot count mismatch");
  Matrix h(rows.rows(), first_.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    auto hr = h.row(r);
    std::copy(biases_.front().data().begin(), biases_.front().data().end(), hr.begin());
    accumulate_row(rows, r, hr);
  }
  return finish(std::move(h));
}

Matrix SlotMlp::forward_shared(const SlotRows& shared, std::uint32_t slot,
                               std::span<const NodeId> nodes) {
  if (shared.slots != slots_ || shared.rows() != 1) {
    throw ContractError("SlotMlp: shared part must be one row of the same layout");
  }
  std::vector<double> base(biases_.front().data());
  accumulate_row(shared, 0, base);
  Matrix h(nodes.size(), first_.rows());
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    const double* p = projection(slot, nodes[r]);
    auto hr = h.row(r);
    for (std::size_t o = 0; o < hr.size(); ++o) hr[o] = base[o] + p[o];
  }
  return finish(std::move(h));
}

Var gin_layer(Tape& t, ParameterStore& store, const Graph& g, Var h, const Mlp& mlp,
              double eps0) {
  return mlp.forward(t, store, ops::gin_aggregate(t, g, h, eps0));
}

Mpnn::Mpnn(std::string prefix, const MpnnSpec& spec) : spec_(spec) {
  if (spec.layers < 1) throw ContractError("Mpnn: need at least one layer");
  for (int l = 0; l < spec.layers; ++l) {
    const std::size_t in = l == 0 ? spec.in_dim : spec.hidden_dim;
    const std::size_t out = l + 1 == spec.layers ? spec.out_dim : spec.hidden_dim;
    layers_.emplace_back(prefix + "/gin" + std::to_string(l),
                         std::vector<std::size_t>{in, spec.hidden_dim, out});
  }
}

void Mpnn::init(ParameterStore& store, std::mt19937_64& rng) const {
  for (const auto& layer : layers_) layer.init(store, rng);
}

std::vector<std::string> Mpnn::parameter_names() const {
  std::vector<std::string> out;
  for (const auto& layer : layers_) {
    auto names = layer.parameter_names();
    out.insert(out.end(), names.begin(), names.end());
  }
  return out;
}

Var Mpnn::forward(Tape& t, ParameterStore& store, const Graph& g, const Matrix& features) const {
  return forward(t, store, g, t.constant(features));
}

Var Mpnn::forward(Tape& t, ParameterStore& store, const Graph& g, Var features) const {
  if (t.value(features).cols() != spec_.in_dim) {
    throw ContractError("Mpnn: features have " + std::to_string(t.value(features).cols()) +
                        " columns, expected " + std::to_string(spec_.in_dim));
  }
  Var h = spec_.input_scale == 1.0 ? features : ops::scale(t, features, spec_.input_scale);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = gin_layer(t, store, g, h, layers_[l], spec_.eps0);
    if (l + 1 < layers_.size()) h = ops::relu(t, h);
  }
  return h;
}

}  // namespace walkex
