// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkex/bench.h"

#include <map>
#include <sstream>

#include "walkex/dataset.h"
#include "walkex/error.h"

namespace walkex {

GraphFamily parse_family(const std::string& name) {
  static const std::map<std::string, GraphFamily> kNames{{"path", GraphFamily::kPath},
                                                         {"cycle", GraphFamily::kCycle},
                                                         {"tree", GraphFamily::kTree},
                                                         {"ba", GraphFamily::kBa},
                                                         {"complete", GraphFamily::kComplete}};
  auto it = kNames.find(name);
  if (it == kNames.end()) {
    throw InputError("unknown graph family '" + name + "' (path, cycle, tree, ba, complete)");
  }
  return it->second;
}

std::string to_string(GraphFamily family) {
  switch (family) {
    case GraphFamily::kPath: return "path";
    case GraphFamily::kCycle: return "cycle";
    case GraphFamily::kTree: return "tree";
    case GraphFamily::kBa: return "ba";
    case GraphFamily::kComplete: return "complete";
  }
  return "?";
}

Graph make_family_graph(GraphFamily family, NodeId n, std::uint64_t seed, int ba_attach) {
  if (n < 1) throw InputError("make_family_graph: n must be >= 1");
  std::vector<Edge> edges;
  switch (family) {
    case GraphFamily::kPath:
      for (NodeId v = 1; v < n; ++v) edges.emplace_back(v - 1, v);
      break;
    case GraphFamily::kCycle:
      if (n < 3) throw InputError("make_family_graph: a cycle needs n >= 3");
      for (NodeId v = 1; v < n; ++v) edges.emplace_back(v - 1, v);
      edges.emplace_back(0, n - 1);
      break;
    case GraphFamily::kTree:
      for (NodeId v = 1; v < n; ++v) edges.emplace_back((v - 1) / 2, v);
      break;
    case GraphFamily::kBa: {
      std::mt19937_64 rng(seed);
      edges = barabasi_albert_edges(n, ba_attach, rng);
      break;
    }
    case GraphFamily::kComplete:
      for (NodeId u = 0; u < n; ++u)
        for (NodeId v = u + 1; v < n; ++v) edges.emplace_back(u, v);
      break;
  }
  return Graph(n, edges);
}

std::vector<std::size_t> cumulative_candidates(const Graph& g, MdpKind kind,
                                               std::span<const NodeId> actions) {
  if (actions.empty()) return {};
  const EnvConfig config{kind, static_cast<int>(actions.size())};
  EnvState s = initial_state(g, 0, config);
  std::vector<std::size_t> out;
  std::size_t total = 0;
  for (NodeId a : actions) {
    if (is_terminal(g, s, config)) break;
    total += feasible_actions(g, s).size();
    out.push_back(total);
    s = apply_action(g, s, a);
  }
  return out;
}

std::vector<std::size_t> random_policy_candidates(const Graph& g, MdpKind kind, int steps,
                                                  std::mt19937_64& rng) {
  const EnvConfig config{kind, steps};
  EnvState s = initial_state(g, 0, config);
  std::vector<std::size_t> out;
  std::size_t total = 0;
  while (!is_terminal(g, s, config)) {
    const auto actions = feasible_actions(g, s);
    total += actions.size();
    out.push_back(total);
    std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
    s = apply_action(g, s, actions[pick(rng)]);
  }
  return out;
}

std::vector<BenchRow> bench_actions(const BenchSpec& spec) {
  std::vector<BenchRow> rows;
  const std::string family = to_string(spec.family);
  for (NodeId n : spec.sizes) {
    for (std::uint64_t seed : spec.seeds) {
      const Graph g = make_family_graph(spec.family, n, seed, spec.ba_attach);
      for (MdpKind kind : {MdpKind::kSubgraphGeneration, MdpKind::kWalkExploration}) {
        const int steps =
            kind == MdpKind::kWalkExploration ? spec.walk_steps : spec.subgraph_steps;
        // Same policy stream for both kinds of the same instance.
        std::mt19937_64 rng(seed * 7919 + static_cast<std::uint64_t>(n));
        const auto counts = random_policy_candidates(g, kind, steps, rng);
        for (std::size_t t = 0; t < counts.size(); ++t) {
          rows.push_back({family, n, kind, seed, static_cast<int>(t + 1), counts[t]});
        }
      }
    }
  }
  return rows;
}

std::string to_csv(std::span<const BenchRow> rows) {
  std::ostringstream out;
  out << "family,n,kind,seed,steps,cumulative_candidates\n";
  for (const auto& r : rows) {
    out << r.family << ',' << r.n << ',' << to_string(r.kind) << ',' << r.seed << ','
        << r.steps << ',' << r.cumulative_candidates << '\n';
  }
  return out.str();
}

LineFit fit_line(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw InputError("fit_line: need at least two paired points");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  LineFit fit;
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (fit.slope * xs[i] + fit.intercept);
    ss_res += e * e;
  }
  fit.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

std::vector<double> mean_curve(std::span<const BenchRow> rows, MdpKind kind) {
  std::map<int, std::pair<double, int>> acc;
  for (const auto& r : rows) {
    if (r.kind != kind) continue;
    auto& [sum, count] = acc[r.steps];
    sum += static_cast<double>(r.cumulative_candidates);
    ++count;
  }
  std::vector<double> out;
  for (const auto& [steps, sc] : acc) out.push_back(sc.first / sc.second);
  return out;
}

std::vector<double> incremental_rate(std::span<const double> curve) {
  std::vector<double> out;
  for (std::size_t t = 1; t < curve.size(); ++t) {
    out.push_back((curve[t] - curve[0]) / static_cast<double>(t));
  }
  return out;
}

bool strictly_increasing(std::span<const double> values) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) return false;
  }
  return true;
}

}  // namespace walkex
