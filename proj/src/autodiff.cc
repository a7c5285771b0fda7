// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkex/autodiff.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "walkex/error.h"

namespace walkex {

// ---------------------------------------------------------------------------
// ParameterStore

Parameter& ParameterStore::add(const std::string& name, Matrix init) {
  if (params_.count(name)) throw ContractError("parameter '" + name + "' already exists");
  Parameter p;
  p.m = Matrix(init.rows(), init.cols());
  p.v = Matrix(init.rows(), init.cols());
  p.value = std::move(init);
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParameterStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParameterStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

std::vector<std::string> ParameterStore::names() const { return names_with_prefix(""); }

std::vector<std::string> ParameterStore::names_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [name, p] : params_) {
    if (name.compare(0, prefix.size(), prefix) == 0) out.push_back(name);
  }
  return out;
}

void ParameterStore::zero_grad() {
  for (auto& [name, p] : params_) p.grad = Matrix(p.value.rows(), p.value.cols());
}

bool ParameterStore::all_finite() const {
  return std::all_of(params_.begin(), params_.end(),
                     [](const auto& kv) { return kv.second.value.all_finite(); });
}

std::uint64_t ParameterStore::fingerprint(const std::string& prefix) const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& [name, p] : params_) {
    if (name.compare(0, prefix.size(), prefix) != 0) continue;
    mix(name.data(), name.size());
    const std::uint64_t shape[2] = {p.value.rows(), p.value.cols()};
    mix(shape, sizeof(shape));
    mix(p.value.data().data(), p.value.size() * sizeof(double));
  }
  return h;
}

namespace {

constexpr char kMagic[8] = {'W', 'L', 'K', 'X', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in, const std::string& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw ParseError(path, 0, "truncated checkpoint");
  }
  return value;
}

}  // namespace

void ParameterStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params_.size()));
  for (const auto& [name, p] : params_) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, 2);
    put<std::uint64_t>(out, p.value.rows());
    put<std::uint64_t>(out, p.value.cols());
    out.write(reinterpret_cast<const char*>(p.value.data().data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

ParameterStore ParameterStore::load(const std::filesystem::path& path) {
  const std::string file = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(file, 0, "cannot open checkpoint");
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError(file, 0, "not a walkex checkpoint");
  }
  if (auto version = get<std::uint32_t>(in, file); version != kVersion) {
    throw ParseError(file, 0, "unsupported checkpoint version " + std::to_string(version));
  }
  ParameterStore store;
  const auto count = get<std::uint32_t>(in, file);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(get<std::uint32_t>(in, file), '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name.size()))) {
      throw ParseError(file, 0, "truncated checkpoint");
    }
    const auto ndim = get<std::uint32_t>(in, file);
    if (ndim != 2) throw ParseError(file, 0, "parameter '" + name + "' is not 2-dimensional");
    const auto rows = get<std::uint64_t>(in, file);
    const auto cols = get<std::uint64_t>(in, file);
    std::vector<double> data(rows * cols);
    if (!in.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(double)))) {
      throw ParseError(file, 0, "truncated checkpoint");
    }
    store.add(name, Matrix(rows, cols, std::move(data)));
  }
  return store;
}

Matrix SlotRows::materialize(const Matrix& z) const {
  const std::size_t k = z.cols();
  Matrix out(rows(), slots * k);
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t i = offsets[r]; i < offsets[r + 1]; ++i) {
      const SlotTerm& term = terms[i];
      if (term.slot >= slots || term.node < 0 || static_cast<std::size_t>(term.node) >= z.rows()) {
        throw ContractError("SlotRows: term outside the slot layout or embedding");
      }
      auto src = z.row(term.node);
      for (std::size_t c = 0; c < k; ++c) out(r, term.slot * k + c) += term.coef * src[c];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tape

Var Tape::constant(Matrix value) { return push(std::move(value), {}, nullptr); }

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(it->second);
  Var v = push(p.value, {}, nullptr);
  nodes_[v.id()].param = &p;
  nodes_[v.id()].requires_grad = record_;
  param_nodes_.emplace(&p, v.id());
  return v;
}

Var Tape::push(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
              std::move(fn));
}

Var Tape::push(Matrix value, std::span<const Var> inputs, BackwardFn fn) {
  Node node;
  node.value = std::move(value);
  if (record_) {
    node.requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                     [&](Var v) { return nodes_[v.id()].requires_grad; });
    if (node.requires_grad) node.backward = std::move(fn);
  }
  nodes_.push_back(std::move(node));
  return Var(static_cast<std::uint32_t>(nodes_.size() - 1));
}

Matrix& Tape::grad_buffer(Var v) {
  Node& n = nodes_[v.id()];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  return n.grad.empty() ? Matrix(n.value.rows(), n.value.cols()) : n.grad;
}

void Tape::backward(Var root) {
  if (!record_) throw ContractError("backward on a tape that does not record");
  const Node& r = nodes_[root.id()];
  if (r.value.rows() != 1 || r.value.cols() != 1) {
    throw ContractError("backward: root must be a scalar (1 x 1)");
  }
  for (auto& n : nodes_) n.grad = Matrix();
  grad_buffer(root)[0] = 1.0;
  for (std::uint32_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
  }
  for (auto& n : nodes_) {
    if (n.param != nullptr) {
      n.param->grad = n.grad.empty() ? Matrix(n.value.rows(), n.value.cols()) : n.grad;
    }
  }
}

void backward(Tape& tape, Var loss, ParameterStore& store) {
  store.zero_grad();
  tape.backward(loss);
}

// ---------------------------------------------------------------------------
// Ops

namespace ops {

namespace {

void require(bool ok, const char* op, const std::string& what) {
  if (!ok) throw ContractError(std::string(op) + ": " + what);
}

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Var linear(Tape& t, Var x, Var w, Var b) {
  const Matrix& X = t.value(x);
  const Matrix& W = t.value(w);
  const Matrix& B = t.value(b);
  require(X.cols() == W.cols(), "linear",
          "input " + shape(X) + " does not conform to weight " + shape(W));
  require(B.rows() == 1 && B.cols() == W.rows(), "linear", "bias shape " + shape(B));
  const std::size_t m = X.rows(), in = W.cols(), out = W.rows();
  Matrix wt(in, out);
  for (std::size_t o = 0; o < out; ++o) {
    for (std::size_t j = 0; j < in; ++j) wt(j, o) = W(o, j);
  }
  Matrix y(m, out);
  for (std::size_t i = 0; i < m; ++i) {
    double* yi = &y.data()[i * out];
    std::copy(B.data().begin(), B.data().end(), yi);
    const double* xi = &X.data()[i * in];
    for (std::size_t j = 0; j < in; ++j) {
      const double xij = xi[j];
      if (xij == 0.0) continue;
      const double* wj = &wt.data()[j * out];
      for (std::size_t o = 0; o < out; ++o) yi[o] += xij * wj[o];
    }
  }
  return t.push(std::move(y), {x, w, b}, [x, w, b, m, in, out](Tape& t, std::uint32_t self) {
    const Matrix& G = t.upstream(self);
    if (t.requires_grad(x)) {
      Matrix& gx = t.grad_buffer(x);
      const Matrix& W = t.value(w);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t o = 0; o < out; ++o) {
          const double g = G(i, o);
          if (g == 0.0) continue;
          const double* wo = &W.data()[o * in];
          double* gxi = &gx.data()[i * in];
          for (std::size_t j = 0; j < in; ++j) gxi[j] += g * wo[j];
        }
      }
    }
    if (t.requires_grad(w)) {
      Matrix& gw = t.grad_buffer(w);
      const Matrix& X = t.value(x);
      for (std::size_t i = 0; i < m; ++i) {
        const double* xi = &X.data()[i * in];
        for (std::size_t o = 0; o < out; ++o) {
          const double g = G(i, o);
          if (g == 0.0) continue;
          double* gwo = &gw.data()[o * in];
          for (std::size_t j = 0; j < in; ++j) gwo[j] += g * xi[j];
        }
      }
    }
    if (t.requires_grad(b)) {
      Matrix& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t o = 0; o < out; ++o) gb[o] += G(i, o);
      }
    }
  });
}

Var slot_linear(Tape& t, Var z, Var w, Var b, const SlotRows& rows) {
  const Matrix& Z = t.value(z);
  const Matrix& W = t.value(w);
  const Matrix& B = t.value(b);
  const std::size_t k = Z.cols(), out = W.rows(), in = W.cols();
  require(rows.slots * k == in, "slot_linear",
          std::to_string(rows.slots) + " slots of width " + std::to_string(k) +
              " do not conform to weight " + shape(W));
  require(B.rows() == 1 && B.cols() == out, "slot_linear", "bias shape " + shape(B));
  for (const auto& term : rows.terms) {
    require(term.slot < rows.slots && term.node >= 0 &&
                static_cast<std::size_t>(term.node) < Z.rows(),
            "slot_linear", "term outside the slot layout or embedding");
  }
  // Each distinct (slot, node) pair is projected once; walk rows share prefixes.
  const std::size_t m = rows.rows();
  std::unordered_map<std::uint64_t, std::size_t> seen;
  std::vector<double> proj;
  Matrix y(m, out);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t o = 0; o < out; ++o) y(r, o) = B[o];
    for (std::size_t i = rows.offsets[r]; i < rows.offsets[r + 1]; ++i) {
      const SlotTerm& term = rows.terms[i];
      const std::uint64_t key = (static_cast<std::uint64_t>(term.slot) << 32) |
                                static_cast<std::uint32_t>(term.node);
      auto [it, fresh] = seen.emplace(key, proj.size());
      if (fresh) {
        const double* zr = &Z.data()[static_cast<std::size_t>(term.node) * k];
        for (std::size_t o = 0; o < out; ++o) {
          const double* wo = &W.data()[o * in + term.slot * k];
          double acc = 0.0;
          for (std::size_t c = 0; c < k; ++c) acc += wo[c] * zr[c];
          proj.push_back(acc);
        }
      }
      const double* p = &proj[it->second];
      for (std::size_t o = 0; o < out; ++o) y(r, o) += term.coef * p[o];
    }
  }
  return t.push(std::move(y), {z, w, b}, [z, w, b, rows, k, out, in](Tape& t, std::uint32_t self) {
    const Matrix& G = t.upstream(self);
    // Upstream gradient summed per distinct (slot, node) pair first.
    std::unordered_map<std::uint64_t, std::vector<double>> acc;
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      for (std::size_t i = rows.offsets[r]; i < rows.offsets[r + 1]; ++i) {
        const SlotTerm& term = rows.terms[i];
        const std::uint64_t key = (static_cast<std::uint64_t>(term.slot) << 32) |
                                  static_cast<std::uint32_t>(term.node);
        auto& g = acc[key];
        if (g.empty()) g.assign(out, 0.0);
        for (std::size_t o = 0; o < out; ++o) g[o] += term.coef * G(r, o);
      }
    }
    const Matrix& Z = t.value(z);
    const Matrix& W = t.value(w);
    Matrix* gz = t.requires_grad(z) ? &t.grad_buffer(z) : nullptr;
    Matrix* gw = t.requires_grad(w) ? &t.grad_buffer(w) : nullptr;
    for (const auto& [key, g] : acc) {
      const std::size_t slot = key >> 32;
      const std::size_t node = key & 0xffffffffu;
      const double* zr = &Z.data()[node * k];
      for (std::size_t o = 0; o < out; ++o) {
        if (g[o] == 0.0) continue;
        if (gw != nullptr) {
          double* gwo = &gw->data()[o * in + slot * k];
          for (std::size_t c = 0; c < k; ++c) gwo[c] += g[o] * zr[c];
        }
        if (gz != nullptr) {
          const double* wo = &W.data()[o * in + slot * k];
          double* gzr = &gz->data()[node * k];
          for (std::size_t c = 0; c < k; ++c) gzr[c] += g[o] * wo[c];
        }
      }
    }
    if (t.requires_grad(b)) {
      Matrix& gb = t.grad_buffer(b);
      for (std::size_t r = 0; r < rows.rows(); ++r) {
        for (std::size_t o = 0; o < out; ++o) gb[o] += G(r, o);
      }
    }
  });
}

Var matmul(Tape& t, Var a, Var b) {
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  require(A.cols() == B.rows(), "matmul", shape(A) + " times " + shape(B));
  const std::size_t n = A.rows(), k = A.cols(), p = B.cols();
  Matrix c(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double aij = A(i, j);
      for (std::size_t l = 0; l < p; ++l) c(i, l) += aij * B(j, l);
    }
  }
  return t.push(std::move(c), {a, b}, [a, b, n, k, p](Tape& t, std::uint32_t self) {
    const Matrix& G = t.upstream(self);
    const Matrix& A = t.value(a);
    const Matrix& B = t.value(b);
    if (t.requires_grad(a)) {
      Matrix& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j)
          for (std::size_t l = 0; l < p; ++l) ga(i, j) += G(i, l) * B(j, l);
    }
    if (t.requires_grad(b)) {
      Matrix& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j)
          for (std::size_t l = 0; l < p; ++l) gb(j, l) += A(i, j) * G(i, l);
    }
  });
}

namespace {

Var add_scaled(Tape& t, Var a, Var b, double sign, const char* name) {
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  require(A.same_shape(B), name, shape(A) + " vs " + shape(B));
  Matrix c = A;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += sign * B[i];
  return t.push(std::move(c), {a, b}, [a, b, sign](Tape& t, std::uint32_t self) {
    const Matrix& G = t.upstream(self);
    if (t.requires_grad(a)) {
      Matrix& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < G.size(); ++i) ga[i] += G[i];
    }
    if (t.requires_grad(b)) {
      Matrix& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < G.size(); ++i) gb[i] += sign * G[i];
    }
  });
}

}  // namespace

Var add(Tape& t, Var a, Var b) { return add_scaled(t, a, b, 1.0, "add"); }
Var sub(Tape& t, Var a, Var b) { return add_scaled(t, a, b, -1.0, "sub"); }

Var scale(Tape& t, Var a, double s) {
  Matrix c = t.value(a);
  for (auto& x : c.data()) x *= s;
  return t.push(std::move(c), {a}, [a, s](Tape& t, std::uint32_t self) {
    const Matrix& G = t.upstream(self);
    Matrix& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < G.size(); ++i) ga[i] += s * G[i];
  });
}

Var relu(Tape& t, Var a) {
  Matrix c = t.value(a);
  double margin = std::numeric_limits<double>::infinity();
  for (auto& x : c.data()) {
    margin = std::min(margin, std::abs(x));
    x = x > 0.0 ? x : 0.0;
  }
  t.note_kink_distance(margin);
  return t.push(std::move(c), {a}, [a](Tape& t, std::uint32_t self) {
    const Matrix& G = t.upstream(self);
    const Matrix& A = t.value(a);
    Matrix& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < G.size(); ++i) {
      if (A[i] > 0.0) ga[i] += G[i];
    }
  });
}

Var square(Tape& t, Var a) {
  Matrix c = t.value(a);
  for (auto& x : c.data()) x *= x;
  return t.push(std::move(c), {a}, [a](Tape& t, std::uint32_t self) {
    const Matrix& G = t.upstream(self);
    const Matrix& A = t.value(a);
    Matrix& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < G.size(); ++i) ga[i] += 2.0 * A[i] * G[i];
  });
}

Var sum(Tape& t, Var a) {
  double s = 0.0;
  for (double x : t.value(a).data()) s += x;
  return t.push(Matrix(1, 1, s), {a}, [a](Tape& t, std::uint32_t self) {
    const double g = t.upstream(self)[0];
    for (auto& x : t.grad_buffer(a).data()) x += g;
  });
}

Var gin_aggregate(Tape& t, const Graph& g, Var h, double eps0) {
  const Matrix& H = t.value(h);
  require(H.rows() == static_cast<std::size_t>(g.node_count()), "gin_aggregate",
          "embedding has " + std::to_string(H.rows()) + " rows for a graph of " +
              std::to_string(g.node_count()) + " nodes");
  const std::size_t cols = H.cols();
  Matrix out(H.rows(), cols);
  for (NodeId v = 0; v < g.node_count(); ++v) {
    auto dst = out.row(v);
    auto self_row = H.row(v);
    for (std::size_t c = 0; c < cols; ++c) dst[c] = (1.0 + eps0) * self_row[c];
    for (NodeId u : g.neighbors(v)) {
      auto src = H.row(u);
      for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
    }
  }
  // The graph outlives the tape by contract (datasets are immutable).
  const Graph* gp = &g;
  return t.push(std::move(out), {h}, [h, gp, eps0, cols](Tape& t, std::uint32_t self) {
    const Matrix& G = t.upstream(self);
    Matrix& gh = t.grad_buffer(h);
    for (NodeId v = 0; v < gp->node_count(); ++v) {
      auto gv = G.row(v);
      auto own = gh.row(v);
      for (std::size_t c = 0; c < cols; ++c) own[c] += (1.0 + eps0) * gv[c];
      for (NodeId u : gp->neighbors(v)) {
        auto dst = gh.row(u);
        for (std::size_t c = 0; c < cols; ++c) dst[c] += gv[c];
      }
    }
  });
}

Var gather_rows(Tape& t, Var a, std::span<const NodeId> rows) {
  const Matrix& A = t.value(a);
  Matrix out(rows.size(), A.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && static_cast<std::size_t>(rows[i]) < A.rows(), "gather_rows",
            "row index out of range");
    std::copy(A.row(rows[i]).begin(), A.row(rows[i]).end(), out.row(i).begin());
  }
  std::vector<NodeId> idx(rows.begin(), rows.end());
  return t.push(std::move(out), {a}, [a, idx = std::move(idx)](Tape& t, std::uint32_t self) {
    const Matrix& G = t.upstream(self);
    Matrix& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto src = G.row(i);
      auto dst = ga.row(idx[i]);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  });
}

Var concat_cols(Tape& t, Var a, Var b) {
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  require(A.rows() == B.rows(), "concat_cols", shape(A) + " vs " + shape(B));
  const std::size_t ca = A.cols(), cb = B.cols();
  Matrix out(A.rows(), ca + cb);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    std::copy(A.row(i).begin(), A.row(i).end(), out.row(i).begin());
    std::copy(B.row(i).begin(), B.row(i).end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(ca));
  }
  return t.push(std::move(out), {a, b}, [a, b, ca, cb](Tape& t, std::uint32_t self) {
    const Matrix& G = t.upstream(self);
    if (t.requires_grad(a)) {
      Matrix& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < G.rows(); ++i)
        for (std::size_t c = 0; c < ca; ++c) ga(i, c) += G(i, c);
    }
    if (t.requires_grad(b)) {
      Matrix& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < G.rows(); ++i)
        for (std::size_t c = 0; c < cb; ++c) gb(i, c) += G(i, ca + c);
    }
  });
}

Var vstack(Tape& t, std::span<const Var> rows) {
  require(!rows.empty(), "vstack", "no inputs");
  const std::size_t cols = t.value(rows.front()).cols();
  std::size_t total = 0;
  for (Var r : rows) {
    require(t.value(r).cols() == cols, "vstack", "column counts differ");
    total += t.value(r).rows();
  }
  Matrix out(total, cols);
  std::size_t at = 0;
  for (Var r : rows) {
    const Matrix& R = t.value(r);
    std::copy(R.data().begin(), R.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(at * cols));
    at += R.rows();
  }
  std::vector<Var> inputs(rows.begin(), rows.end());
  return t.push(std::move(out), rows, [inputs](Tape& t, std::uint32_t self) {
    const Matrix& G = t.upstream(self);
    std::size_t offset = 0;
    for (Var r : inputs) {
      const std::size_t n = t.value(r).size();
      if (t.requires_grad(r)) {
        Matrix& gr = t.grad_buffer(r);
        for (std::size_t i = 0; i < n; ++i) gr[i] += G[offset + i];
      }
      offset += n;
    }
  });
}

Var concat_rows_padded(Tape& t, Var a, std::span<const NodeId> seq, std::size_t slots) {
  const Matrix& A = t.value(a);
  require(seq.size() <= slots, "concat_rows_padded",
          "sequence of length " + std::to_string(seq.size()) + " exceeds " +
              std::to_string(slots) + " slots");
  const std::size_t k = A.cols();
  Matrix out(1, slots * k);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    require(seq[i] >= 0 && static_cast<std::size_t>(seq[i]) < A.rows(), "concat_rows_padded",
            "row index out of range");
    std::copy(A.row(seq[i]).begin(), A.row(seq[i]).end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(i * k));
  }
  std::vector<NodeId> idx(seq.begin(), seq.end());
  return t.push(std::move(out), {a}, [a, k, idx = std::move(idx)](Tape& t, std::uint32_t self) {
    const Matrix& G = t.upstream(self);
    Matrix& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto dst = ga.row(idx[i]);
      for (std::size_t c = 0; c < k; ++c) dst[c] += G[i * k + c];
    }
  });
}

Var mean_of_rows(Tape& t, Var a, std::span<const NodeId> rows) {
  const Matrix& A = t.value(a);
  const std::size_t k = A.cols();
  Matrix out(1, k);
  for (NodeId r : rows) {
    require(r >= 0 && static_cast<std::size_t>(r) < A.rows(), "mean_of_rows",
            "row index out of range");
    auto src = A.row(r);
    for (std::size_t c = 0; c < k; ++c) out[c] += src[c];
  }
  const double inv = rows.empty() ? 0.0 : 1.0 / static_cast<double>(rows.size());
  for (auto& x : out.data()) x *= inv;
  std::vector<NodeId> idx(rows.begin(), rows.end());
  return t.push(std::move(out), {a}, [a, k, inv, idx = std::move(idx)](Tape& t, std::uint32_t self) {
    const Matrix& G = t.upstream(self);
    Matrix& ga = t.grad_buffer(a);
    for (NodeId r : idx) {
      auto dst = ga.row(r);
      for (std::size_t c = 0; c < k; ++c) dst[c] += inv * G[c];
    }
  });
}

Var mean_rows(Tape& t, Var a) {
  const Matrix& A = t.value(a);
  require(A.rows() > 0, "mean_rows", "no rows");
  std::vector<NodeId> all(A.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<NodeId>(i);
  return mean_of_rows(t, a, all);
}

Var max_rows(Tape& t, Var a) {
  const Matrix& A = t.value(a);
  require(A.rows() > 0, "max_rows", "no rows");
  const std::size_t k = A.cols();
  Matrix out(1, k);
  std::vector<std::size_t> arg(k, 0);
  for (std::size_t c = 0; c < k; ++c) {
    out[c] = A(0, c);
    for (std::size_t r = 1; r < A.rows(); ++r) {
      if (A(r, c) > out[c]) {
        out[c] = A(r, c);
        arg[c] = r;
      }
    }
  }
  return t.push(std::move(out), {a}, [a, arg = std::move(arg)](Tape& t, std::uint32_t self) {
    const Matrix& G = t.upstream(self);
    Matrix& ga = t.grad_buffer(a);
    for (std::size_t c = 0; c < arg.size(); ++c) ga(arg[c], c) += G[c];
  });
}

Var l1_loss(Tape& t, Var pred, Var target) {
  const Matrix& P = t.value(pred);
  const Matrix& T = t.value(target);
  require(P.same_shape(T), "l1_loss", shape(P) + " vs " + shape(T));
  double s = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    s += std::abs(P[i] - T[i]);
    t.note_kink_distance(std::abs(P[i] - T[i]));
  }
  return t.push(Matrix(1, 1, s), {pred, target}, [pred, target](Tape& t, std::uint32_t self) {
    const double g = t.upstream(self)[0];
    const Matrix& P = t.value(pred);
    const Matrix& T = t.value(target);
    auto sign = [](double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); };
    if (t.requires_grad(pred)) {
      Matrix& gp = t.grad_buffer(pred);
      for (std::size_t i = 0; i < P.size(); ++i) gp[i] += g * sign(P[i] - T[i]);
    }
    if (t.requires_grad(target)) {
      Matrix& gt = t.grad_buffer(target);
      for (std::size_t i = 0; i < P.size(); ++i) gt[i] -= g * sign(P[i] - T[i]);
    }
  });
}

Var softmax_cross_entropy(Tape& t, Var logits, int label) {
  const Matrix& Z = t.value(logits);
  require(Z.rows() == 1 && Z.cols() > 0, "softmax_cross_entropy", "logits must be 1 x C");
  if (label < 0 || static_cast<std::size_t>(label) >= Z.cols()) {
    throw InputError("softmax_cross_entropy: label " + std::to_string(label) +
                     " outside [0, " + std::to_string(Z.cols()) + ")");
  }
  const double mx = *std::max_element(Z.data().begin(), Z.data().end());
  double denom = 0.0;
  for (double z : Z.data()) denom += std::exp(z - mx);
  const double loss = -(Z[static_cast<std::size_t>(label)] - mx - std::log(denom));
  return t.push(Matrix(1, 1, loss), {logits},
                [logits, label, mx, denom](Tape& t, std::uint32_t self) {
                  const double g = t.upstream(self)[0];
                  const Matrix& Z = t.value(logits);
                  Matrix& gz = t.grad_buffer(logits);
                  for (std::size_t c = 0; c < Z.size(); ++c) {
                    const double p = std::exp(Z[c] - mx) / denom;
                    gz[c] += g * (p - (static_cast<int>(c) == label ? 1.0 : 0.0));
                  }
                });
}

}  // namespace ops

// ---------------------------------------------------------------------------
// Optimizer and gradient check

void adam_step(ParameterStore& store, std::span<const std::string> names, double lr,
               const AdamConfig& config) {
  for (const auto& name : names) {
    Parameter& p = store.at(name);
    if (p.grad.empty() || !p.grad.same_shape(p.value)) {
      throw ContractError("adam_step: parameter '" + name + "' has no gradient");
    }
    ++p.steps;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(p.steps));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(p.steps));
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      p.m[i] = config.beta1 * p.m[i] + (1.0 - config.beta1) * g;
      p.v[i] = config.beta2 * p.v[i] + (1.0 - config.beta2) * g * g;
      const double m_hat = p.m[i] / bc1;
      const double v_hat = p.v[i] / bc2;
      p.value[i] -= lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

double finite_difference_check(const Objective& f, ParameterStore& store,
                               std::span<const std::string> names, double h) {
  if (!(h > 0.0)) throw InputError("finite_difference_check: h must be positive");
  {
    Tape tape;
    Var loss = f(tape, store);
    backward(tape, loss, store);
  }
  auto eval = [&]() {
    Tape tape(false);
    return tape.value(f(tape, store))[0];
  };
  double worst = 0.0;
  for (const auto& name : names) {
    Parameter& p = store.at(name);
    const Matrix analytic = p.grad;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + h;
      const double up = eval();
      p.value[i] = saved - h;
      const double down = eval();
      p.value[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace walkex
