// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkex/gradcheck.h"

#include <algorithm>
#include <functional>
#include <map>
#include <random>

#include "walkex/agent.h"
#include "walkex/autodiff.h"
#include "walkex/error.h"
#include "walkex/nn.h"

namespace walkex {

bool GradCheckReport::passed() const {
  return std::all_of(blocks.begin(), blocks.end(),
                     [&](const BlockCheck& b) { return b.max_rel_error < tolerance; });
}

const BlockCheck& GradCheckReport::worst() const {
  if (blocks.empty()) throw ContractError("GradCheckReport: no blocks");
  return *std::max_element(blocks.begin(), blocks.end(),
                           [](const BlockCheck& a, const BlockCheck& b) {
                             return a.max_rel_error < b.max_rel_error;
                           });
}

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix m(r, c);
  for (auto& x : m.data()) x = dist(rng);
  return m;
}

// Connected graph: a random spanning path plus a few random chords.
Graph random_connected_graph(NodeId n, std::mt19937_64& rng) {
  std::vector<NodeId> order(static_cast<std::size_t>(n));
  for (NodeId v = 0; v < n; ++v) order[v] = v;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Edge> edges;
  for (NodeId i = 1; i < n; ++i) edges.emplace_back(order[i - 1], order[i]);
  std::uniform_int_distribution<NodeId> pick(0, n - 1);
  for (int extra = 0; extra < n / 2; ++extra) {
    NodeId u = pick(rng), v = pick(rng);
    if (u != v) edges.emplace_back(u, v);
  }
  return Graph(n, edges);
}

// Adds a term whose value is 0 but whose backward pushes +1 into x.
Var corrupt(Tape& t, Var loss, Var x) {
  Var bogus = t.push(Matrix(1, 1, 0.0), {x}, [x](Tape& t, std::uint32_t self) {
    const double g = t.upstream(self)[0];
    for (auto& v : t.grad_buffer(x).data()) v += g;
  });
  return ops::add(t, loss, bogus);
}

Var sum_of_squares(Tape& t, Var x) { return ops::sum(t, ops::square(t, x)); }

struct Instance {
  ParameterStore store;
  std::vector<std::string> names;
  std::function<Var(Tape&, ParameterStore&)> objective;
};

using Builder = std::function<Instance(std::mt19937_64&)>;

std::map<std::string, Builder> builders() {
  std::map<std::string, Builder> b;

  b["linear"] = [](std::mt19937_64& rng) {
    Instance in;
    in.store.add("W", random_matrix(3, 4, rng));
    in.store.add("b", random_matrix(1, 3, rng));
    in.store.add("x", random_matrix(2, 4, rng, 0.1));
    in.names = {"W", "b", "x"};
    in.objective = [](Tape& t, ParameterStore& s) {
      return sum_of_squares(t, linear_forward(t, t.param(s.at("W")), t.param(s.at("b")),
                                              t.param(s.at("x"))));
    };
    return in;
  };

  b["mlp_forward"] = [](std::mt19937_64& rng) {
    Instance in;
    const Mlp mlp("mlp", {5, 6, 3});
    mlp.init(in.store, rng);
    in.store.add("x", random_matrix(2, 5, rng, 0.1));
    in.names = mlp.parameter_names();
    in.names.push_back("x");
    in.objective = [mlp](Tape& t, ParameterStore& s) {
      return sum_of_squares(t, mlp.forward(t, s, t.param(s.at("x"))));
    };
    return in;
  };

  b["gin_layer"] = [](std::mt19937_64& rng) {
    Instance in;
    auto g = std::make_shared<Graph>(random_connected_graph(6, rng));
    const Mlp mlp("gin", {3, 4, 2});
    mlp.init(in.store, rng);
    in.store.add("h", random_matrix(6, 3, rng, 0.1));
    in.names = mlp.parameter_names();
    in.names.push_back("h");
    in.objective = [mlp, g](Tape& t, ParameterStore& s) {
      return sum_of_squares(t, gin_layer(t, s, *g, t.param(s.at("h")), mlp, 0.0));
    };
    return in;
  };

  b["mpnn_forward"] = [](std::mt19937_64& rng) {
    Instance in;
    auto g = std::make_shared<Graph>(random_connected_graph(5, rng));
    const Mpnn mpnn("theta", MpnnSpec{3, 3, 4, 4, 0.0});
    mpnn.init(in.store, rng);
    in.store.add("x", random_matrix(5, 3, rng, 0.1));
    in.names = mpnn.parameter_names();
    in.names.push_back("x");
    in.objective = [mpnn, g](Tape& t, ParameterStore& s) {
      return ops::scale(t, sum_of_squares(t, mpnn.forward(t, s, *g, t.param(s.at("x")))), 0.1);
    };
    return in;
  };

  b["softmax_cross_entropy"] = [](std::mt19937_64& rng) {
    Instance in;
    in.store.add("logits", random_matrix(1, 4, rng, 0.5));
    const int label = std::uniform_int_distribution<int>(0, 3)(rng);
    in.names = {"logits"};
    in.objective = [label](Tape& t, ParameterStore& s) {
      return ops::softmax_cross_entropy(t, t.param(s.at("logits")), label);
    };
    return in;
  };

  b["l1_loss"] = [](std::mt19937_64& rng) {
    Instance in;
    in.store.add("pred", random_matrix(4, 1, rng, 0.1));
    const Matrix target = random_matrix(4, 1, rng, 0.1);
    in.names = {"pred"};
    in.objective = [target](Tape& t, ParameterStore& s) {
      return ops::l1_loss(t, t.param(s.at("pred")), t.constant(target));
    };
    return in;
  };

  // Full 3-layer MPNN, mean readout and cross-entropy on a 5-node graph.
  b["mpnn_cross_entropy"] = [](std::mt19937_64& rng) {
    Instance in;
    auto g = std::make_shared<Graph>(random_connected_graph(5, rng));
    const Mpnn mpnn("theta", MpnnSpec{3, 2, 6, 4, 0.0});
    const Mlp head("head", {4, 3});
    mpnn.init(in.store, rng);
    head.init(in.store, rng);
    const Matrix x = random_matrix(5, 2, rng, 0.1);
    const int label = std::uniform_int_distribution<int>(0, 2)(rng);
    in.names = mpnn.parameter_names();
    for (const auto& n : head.parameter_names()) in.names.push_back(n);
    in.objective = [mpnn, head, g, x, label](Tape& t, ParameterStore& s) {
      Var z = mpnn.forward(t, s, *g, x);
      return ops::softmax_cross_entropy(t, head.forward(t, s, ops::mean_rows(t, z)), label);
    };
    return in;
  };

  // Q-learning loss over one walk; gradients must reach both the Q-net and
  // the MPNN that produced Z.
  b["trajectory_loss"] = [](std::mt19937_64& rng) {
    Instance in;
    auto g = std::make_shared<Graph>(random_connected_graph(5, rng));
    const EnvConfig env{MdpKind::kWalkExploration, 3};
    const Mpnn mpnn("theta", MpnnSpec{3, 2, 4, 4, 0.0});
    const AgentPair agent(state_encoding_dim(env, 4), 4, 6);
    mpnn.init(in.store, rng);
    agent.init(in.store, rng);
    const Matrix x = random_matrix(5, 2, rng, 0.1);

    Trajectory traj;
    EnvState s = initial_state(*g, 0, env);
    std::vector<double> targets;
    std::uniform_real_distribution<double> target_dist(-0.1, 0.1);
    while (!is_terminal(*g, s, env)) {
      auto actions = feasible_actions(*g, s);
      NodeId a = actions[std::uniform_int_distribution<std::size_t>(0, actions.size() - 1)(rng)];
      EnvState next = apply_action(*g, s, a);
      traj.steps.push_back({s, a, 0.0, next, is_terminal(*g, next, env)});
      targets.push_back(target_dist(rng));
      s = next;
    }
    in.names = mpnn.parameter_names();
    for (const auto& n : agent.policy.parameter_names()) in.names.push_back(n);
    in.objective = [mpnn, agent, g, x, env, traj, targets](Tape& t, ParameterStore& s) {
      Var z = mpnn.forward(t, s, *g, x);
      const Trajectory trajs[1] = {traj};
      return trajectory_loss(t, s, agent, trajs, targets, [z](std::size_t) { return z; }, env);
    };
    return in;
  };

  return b;
}

}  // namespace

std::vector<std::string> gradient_check_blocks() {
  std::vector<std::string> out;
  for (const auto& [name, builder] : builders()) out.push_back(name);
  return out;
}

GradCheckReport run_gradient_checks(int seeds, double tolerance, double h,
                                    const std::optional<std::string>& corrupt_block,
                                    double kink_margin) {
  const auto all = builders();
  if (corrupt_block && !all.count(*corrupt_block)) {
    throw InputError("unknown gradient-check block '" + *corrupt_block + "'");
  }
  GradCheckReport report;
  report.tolerance = tolerance;
  for (const auto& [name, build] : all) {
    BlockCheck check{name, 0.0};
    for (int seed = 0; seed < seeds; ++seed) {
      std::mt19937_64 rng(static_cast<std::uint64_t>(seed) * 1000003ULL + name.size());
      Instance in;
      for (int attempt = 0;; ++attempt) {
        in = build(rng);
        // Zero biases can park pre-activations exactly on a ReLU kink.
        for (auto& [pname, p] : in.store) {
          if (pname.size() > 2 && pname.compare(pname.size() - 2, 2, "/b") == 0) {
            p.value = random_matrix(p.value.rows(), p.value.cols(), rng, 0.05);
          }
        }
        Tape probe(false);
        in.objective(probe, in.store);
        if (probe.kink_margin() >= kink_margin) break;
        if (attempt == 100) throw ContractError("gradient check: no smooth instance for " + name);
        ++check.redrawn;
      }
      Objective f = in.objective;
      if (corrupt_block && *corrupt_block == name) {
        const std::string target = in.names.front();
        f = [inner = in.objective, target](Tape& t, ParameterStore& s) {
          return corrupt(t, inner(t, s), t.param(s.at(target)));
        };
      }
      check.max_rel_error =
          std::max(check.max_rel_error, finite_difference_check(f, in.store, in.names, h));
    }
    report.blocks.push_back(check);
  }
  return report;
}

}  // namespace walkex
