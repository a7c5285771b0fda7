// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkex/dataset.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "walkex/error.h"

namespace walkex {

namespace fs = std::filesystem;

void GraphDataset::validate() const {
  if (graphs.size() != features.size() || graphs.size() != labels.size()) {
    throw InputError("GraphDataset: graphs, features and labels differ in length");
  }
  if (num_classes() < 2) throw InputError("GraphDataset: at least two classes are required");
  const std::size_t d = feature_dim();
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (features[i].dim() != d) throw InputError("GraphDataset: feature dimension differs");
    if (features[i].rows() != static_cast<std::size_t>(graphs[i].node_count())) {
      throw InputError("GraphDataset: feature rows differ from node count");
    }
    if (labels[i] < 0 || labels[i] >= num_classes()) {
      throw InputError("GraphDataset: label out of range");
    }
  }
}

bool operator==(const GraphDataset& a, const GraphDataset& b) {
  if (a.name != b.name || a.labels != b.labels || a.features != b.features ||
      a.class_values != b.class_values || a.node_label_values != b.node_label_values ||
      a.graphs.size() != b.graphs.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.graphs.size(); ++i) {
    if (a.graphs[i].node_count() != b.graphs[i].node_count() ||
        a.graphs[i].edges() != b.graphs[i].edges()) {
      return false;
    }
  }
  return true;
}

std::vector<std::size_t> FoldSplit::validation_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldSplit::training_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(i);
  }
  return out;
}

namespace {

// Lines of a text file with LF or CRLF endings. A trailing newline does not
// produce an extra empty line.
std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

// Comma-separated integers with optional surrounding spaces.
std::vector<std::int64_t> parse_ints(const std::string& line, const fs::path& path,
                                     std::size_t line_no) {
  std::vector<std::int64_t> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t end = line.find(',', pos);
    std::string_view tok(line.data() + pos, (end == std::string::npos ? line.size() : end) - pos);
    while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.remove_suffix(1);
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw ParseError(path.string(), line_no,
                       "expected an integer, found '" + std::string(tok) + "'");
    }
    out.push_back(value);
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  return out;
}

std::int64_t parse_single(const std::string& line, const fs::path& path, std::size_t line_no) {
  auto values = parse_ints(line, path, line_no);
  if (values.size() != 1) throw ParseError(path.string(), line_no, "expected one integer");
  return values.front();
}

fs::path file_for(const fs::path& dir, const std::string& name, const std::string& suffix) {
  return dir / (name + "_" + suffix + ".txt");
}

}  // namespace

GraphDataset parse_tudataset(const fs::path& directory, const std::string& name) {
  const fs::path a_path = file_for(directory, name, "A");
  const fs::path ind_path = file_for(directory, name, "graph_indicator");
  const fs::path gl_path = file_for(directory, name, "graph_labels");
  const fs::path nl_path = file_for(directory, name, "node_labels");
  for (const auto& p : {a_path, ind_path, gl_path}) {
    if (!fs::exists(p)) throw ParseError(p.string(), 0, "missing file");
  }

  GraphDataset ds;
  ds.name = name;

  // Graph labels, remapped to 0..C-1 in sorted order of the raw values.
  std::vector<std::int64_t> raw_labels;
  {
    auto lines = read_lines(gl_path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      raw_labels.push_back(parse_single(lines[i], gl_path, i + 1));
    }
  }
  const std::size_t graph_count = raw_labels.size();
  ds.class_values = raw_labels;
  std::sort(ds.class_values.begin(), ds.class_values.end());
  ds.class_values.erase(std::unique(ds.class_values.begin(), ds.class_values.end()),
                        ds.class_values.end());
  for (auto v : raw_labels) {
    ds.labels.push_back(static_cast<int>(
        std::lower_bound(ds.class_values.begin(), ds.class_values.end(), v) -
        ds.class_values.begin()));
  }

  // Node -> (graph, local id).
  std::vector<std::size_t> node_graph;
  std::vector<NodeId> node_local;
  std::vector<NodeId> graph_sizes(graph_count, 0);
  {
    auto lines = read_lines(ind_path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      auto gid = parse_single(lines[i], ind_path, i + 1);
      if (gid < 1 || static_cast<std::size_t>(gid) > graph_count) {
        throw ParseError(ind_path.string(), i + 1,
                         "graph id " + std::to_string(gid) + " has no entry in " +
                             gl_path.filename().string());
      }
      node_graph.push_back(static_cast<std::size_t>(gid - 1));
      node_local.push_back(graph_sizes[gid - 1]++);
    }
  }
  for (std::size_t g = 0; g < graph_count; ++g) {
    if (graph_sizes[g] == 0) {
      throw ParseError(ind_path.string(), 0, "graph " + std::to_string(g + 1) + " has no nodes");
    }
  }

  std::vector<std::vector<Edge>> graph_edges(graph_count);
  {
    auto lines = read_lines(a_path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      auto ij = parse_ints(lines[i], a_path, i + 1);
      if (ij.size() != 2) throw ParseError(a_path.string(), i + 1, "expected 'i, j'");
      for (auto v : ij) {
        if (v < 1 || static_cast<std::size_t>(v) > node_graph.size()) {
          throw ParseError(a_path.string(), i + 1,
                           "node " + std::to_string(v) + " is not in the graph indicator");
        }
      }
      const auto u = static_cast<std::size_t>(ij[0] - 1);
      const auto v = static_cast<std::size_t>(ij[1] - 1);
      if (u == v) throw ParseError(a_path.string(), i + 1, "self-loop on node " + std::to_string(ij[0]));
      if (node_graph[u] != node_graph[v]) {
        throw ParseError(a_path.string(), i + 1, "edge crosses graph boundary");
      }
      graph_edges[node_graph[u]].emplace_back(node_local[u], node_local[v]);
    }
  }
  for (std::size_t g = 0; g < graph_count; ++g) ds.graphs.emplace_back(graph_sizes[g], graph_edges[g]);

  std::vector<std::vector<int>> local_labels(graph_count);
  if (fs::exists(nl_path)) {
    auto lines = read_lines(nl_path);
    if (lines.size() != node_graph.size()) {
      throw ParseError(nl_path.string(), lines.size(),
                       "expected " + std::to_string(node_graph.size()) + " node labels");
    }
    std::vector<std::int64_t> raw(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
      // Some datasets append extra columns; the first one is the label.
      auto values = parse_ints(lines[i], nl_path, i + 1);
      raw[i] = values.front();
    }
    ds.node_label_values = raw;
    std::sort(ds.node_label_values.begin(), ds.node_label_values.end());
    ds.node_label_values.erase(
        std::unique(ds.node_label_values.begin(), ds.node_label_values.end()),
        ds.node_label_values.end());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      local_labels[node_graph[i]].push_back(static_cast<int>(
          std::lower_bound(ds.node_label_values.begin(), ds.node_label_values.end(), raw[i]) -
          ds.node_label_values.begin()));
    }
    const int d = static_cast<int>(ds.node_label_values.size());
    for (std::size_t g = 0; g < graph_count; ++g) {
      ds.features.push_back(NodeFeatureMatrix::one_hot(local_labels[g], d));
    }
  } else {
    std::clog << "warning: " << nl_path.string()
              << " not found; using a constant node feature (d = 1)\n";
    for (std::size_t g = 0; g < graph_count; ++g) {
      ds.features.push_back(NodeFeatureMatrix::constant(graph_sizes[g]));
    }
  }

  if (ds.num_classes() < 2) {
    throw ParseError(gl_path.string(), graph_count, "dataset needs at least two classes");
  }
  return ds;
}

void write_tudataset(const GraphDataset& dataset, const fs::path& directory,
                     const std::string& name, const std::vector<MotifAnnotation>* motifs) {
  fs::create_directories(directory);
  auto open = [&](const std::string& suffix) {
    std::ofstream out(file_for(directory, name, suffix), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file_for(directory, name, suffix).string());
    return out;
  };
  std::ofstream a = open("A");
  std::ofstream ind = open("graph_indicator");
  std::ofstream gl = open("graph_labels");
  std::size_t offset = 0;
  for (std::size_t g = 0; g < dataset.size(); ++g) {
    const Graph& graph = dataset.graphs[g];
    for (auto [u, v] : graph.edges()) {
      a << offset + u + 1 << ", " << offset + v + 1 << '\n';
      a << offset + v + 1 << ", " << offset + u + 1 << '\n';
    }
    for (NodeId v = 0; v < graph.node_count(); ++v) ind << g + 1 << '\n';
    gl << dataset.class_values.at(dataset.labels[g]) << '\n';
    offset += graph.node_count();
  }
  if (!dataset.node_label_values.empty()) {
    std::ofstream nl = open("node_labels");
    for (const auto& f : dataset.features) {
      for (std::size_t v = 0; v < f.rows(); ++v) {
        auto row = f.values().row(v);
        auto col = std::max_element(row.begin(), row.end()) - row.begin();
        nl << dataset.node_label_values.at(static_cast<std::size_t>(col)) << '\n';
      }
    }
  }
  if (motifs != nullptr) {
    std::ofstream mf = open("motif_nodes");
    for (const auto& m : *motifs) {
      for (std::size_t i = 0; i < m.nodes.size(); ++i) mf << (i ? "," : "") << m.nodes[i];
      mf << '\n';
    }
  }
}

std::vector<std::vector<NodeId>> read_motif_nodes(const fs::path& file) {
  std::vector<std::vector<NodeId>> out;
  auto lines = read_lines(file);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::vector<NodeId> ids;
    for (auto v : parse_ints(lines[i], file, i + 1)) ids.push_back(static_cast<NodeId>(v));
    out.push_back(std::move(ids));
  }
  return out;
}

std::vector<Edge> motif_template(MotifKind kind) {
  std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}};
  // Node 0 is the roof apex of the house; the chord closes the roof triangle.
  if (kind == MotifKind::kHouse) edges.emplace_back(1, 4);
  return edges;
}

Ba2MotifsResult generate_ba2motifs(int num_graphs, int base_nodes, int attach_edges,
                                   std::uint64_t seed) {
  if (num_graphs <= 0 || num_graphs % 2 != 0) {
    throw InputError("generate_ba2motifs: num_graphs must be positive and even");
  }
  if (base_nodes < 5) throw InputError("generate_ba2motifs: base_nodes must be >= 5");
  if (attach_edges < 1 || attach_edges + 1 > base_nodes) {
    throw InputError("generate_ba2motifs: attach_edges must lie in [1, base_nodes - 1]");
  }
  std::mt19937_64 rng(seed);
  Ba2MotifsResult out;
  GraphDataset& ds = out.dataset;
  ds.name = "ba2motifs";
  ds.class_values = {0, 1};
  const NodeId n = base_nodes + 5;
  for (int i = 0; i < num_graphs; ++i) {
    const auto kind = (i % 2 == 0) ? MotifKind::kCycle : MotifKind::kHouse;
    auto edges = barabasi_albert_edges(base_nodes, attach_edges, rng);
    for (auto [u, v] : motif_template(kind)) edges.emplace_back(base_nodes + u, base_nodes + v);
    std::uniform_int_distribution<NodeId> base_pick(0, base_nodes - 1);
    std::uniform_int_distribution<NodeId> motif_pick(0, 4);
    const NodeId anchor = base_pick(rng);
    const NodeId motif_end = base_nodes + motif_pick(rng);
    edges.emplace_back(anchor, motif_end);

    std::vector<NodeId> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (auto& [u, v] : edges) {
      u = perm[u];
      v = perm[v];
    }
    MotifAnnotation motif{{}, kind};
    for (NodeId j = 0; j < 5; ++j) motif.nodes.push_back(perm[base_nodes + j]);
    std::sort(motif.nodes.begin(), motif.nodes.end());

    ds.graphs.emplace_back(n, edges);
    ds.features.push_back(NodeFeatureMatrix::constant(n));
    ds.labels.push_back(static_cast<int>(kind));
    out.motifs.push_back(std::move(motif));
  }
  return out;
}

FoldSplit stratified_k_fold(const GraphDataset& dataset, int k, std::uint64_t seed) {
  if (k < 2) throw InputError("stratified_k_fold: k must be >= 2");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.labels.size(); ++i) by_class[dataset.labels[i]].push_back(i);
  for (const auto& [label, members] : by_class) {
    if (members.size() < static_cast<std::size_t>(k)) {
      throw ConstraintError("stratified_k_fold: class " + std::to_string(label) + " has " +
                            std::to_string(members.size()) + " graphs, fewer than k = " +
                            std::to_string(k));
    }
  }
  std::mt19937_64 rng(seed);
  FoldSplit split{k, std::vector<int>(dataset.labels.size(), -1)};
  std::size_t cursor = 0;
  for (auto& [label, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t idx : members) split.assignments[idx] = static_cast<int>(cursor++ % k);
  }
  return split;
}

}  // namespace walkex
