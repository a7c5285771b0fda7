// Copyright 2026 The walkex Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WALKEX_DATASET_H_
#define WALKEX_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "walkex/graph.h"

namespace walkex {

// Labeled graphs with one-hot node features of a shared dimension.
struct GraphDataset {
  std::string name;
  std::vector<Graph> graphs;
  std::vector<NodeFeatureMatrix> features;
  std::vector<int> labels;  // in [0, num_classes())

  // Original label values from the source files; class id c stands for
  // class_values[c] and one-hot column j for node_label_values[j]. An empty
  // node_label_values means the dataset carries no node labels (d = 1).
  std::vector<std::int64_t> class_values;
  std::vector<std::int64_t> node_label_values;

  std::size_t size() const { return graphs.size(); }
  int num_classes() const { return static_cast<int>(class_values.size()); }
  std::size_t feature_dim() const { return features.empty() ? 0 : features.front().dim(); }

  // Throws InputError if the type invariants do not hold.
  void validate() const;

  friend bool operator==(const GraphDataset&, const GraphDataset&);
};

enum class MotifKind { kCycle = 0, kHouse = 1 };

struct MotifAnnotation {
  std::vector<NodeId> nodes;  // 5 sorted ids
  MotifKind kind;
  friend bool operator==(const MotifAnnotation&, const MotifAnnotation&) = default;
};

struct FoldSplit {
  int k = 0;
  std::vector<int> assignments;  // fold index per graph

  std::vector<std::size_t> validation_indices(int fold) const;
  std::vector<std::size_t> training_indices(int fold) const;
};

// Reads {name}_A.txt, {name}_graph_indicator.txt, {name}_graph_labels.txt
// and, when present, {name}_node_labels.txt from `directory`. Errors are
// ParseError with file and line.
GraphDataset parse_tudataset(const std::filesystem::path& directory, const std::string& name);

// Writes the same four files (node labels only if the dataset has them),
// plus {name}_motif_nodes.txt when motifs are given.
void write_tudataset(const GraphDataset& dataset, const std::filesystem::path& directory,
                     const std::string& name,
                     const std::vector<MotifAnnotation>* motifs = nullptr);

// One line per graph of comma-separated 0-based ids.
std::vector<std::vector<NodeId>> read_motif_nodes(const std::filesystem::path& file);

// Preferential-attachment graph: a clique on attach_edges + 1 nodes, then
// each new node links to attach_edges distinct earlier nodes chosen with
// probability proportional to degree.
template <class Rng>
std::vector<Edge> barabasi_albert_edges(NodeId node_count, int attach_edges, Rng& rng);

// The fixed motif templates on nodes 0..4.
std::vector<Edge> motif_template(MotifKind kind);

struct Ba2MotifsResult {
  GraphDataset dataset;
  std::vector<MotifAnnotation> motifs;
};

// Even-indexed graphs carry a cycle (label 0), odd-indexed a house (label 1).
// Node ids are shuffled per graph so the motif position carries no signal.
Ba2MotifsResult generate_ba2motifs(int num_graphs, int base_nodes = 20, int attach_edges = 1,
                                   std::uint64_t seed = 0);

// Stratified split: each class is shuffled and dealt round-robin, so every
// fold holds floor or ceil of (class size / k) graphs of each class.
FoldSplit stratified_k_fold(const GraphDataset& dataset, int k, std::uint64_t seed);

}  // namespace walkex

#include "walkex/dataset_inl.h"

#endif  // WALKEX_DATASET_H_
