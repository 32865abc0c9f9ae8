#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ssread/matrix.hpp"

namespace ssread {

// One undirected graph. Edges are stored once, (u, v) with u < v, in
// lexicographic order; self-loops only appear later through the symmetric
// normalization (A + I).
struct Graph {
  int num_nodes = 0;
  std::vector<std::pair<int, int>> edges;
  Matrix features;               // num_nodes x feature_dim
  int label = 0;                 // contiguous class index
  std::vector<int> node_labels;  // raw labels from the *_node_labels file, empty if absent

  int degree(int n) const;
};

struct Dataset {
  std::vector<Graph> graphs;
  int num_classes = 0;
  int feature_dim = 0;
  std::string name;
};

struct TuParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class FeaturePolicy {
  Auto,             // one-hot node labels when present, else constant one
  NodeLabelOneHot,  // requires the *_node_labels file
  ConstantOne,
  DegreeOneHot,  // one-hot of min(degree, cap)
};

// Parses the TU plain-text benchmark layout from `dir`:
//   {name}_A.txt               "row, col" pairs, 1-based, both directions listed
//   {name}_graph_indicator.txt 1-based graph id per node line
//   {name}_graph_labels.txt    one integer per graph
//   {name}_node_labels.txt     one integer per node (optional)
// Graph labels are remapped to [0, C) preserving sorted order; the duplicated
// directed edge pairs are merged into single undirected edges.
Dataset parse_tu(const std::filesystem::path& dir, const std::string& name,
                 FeaturePolicy policy = FeaturePolicy::Auto, int degree_cap = 10);

// Fills graph.features / ds.feature_dim according to the policy.
void build_features(Dataset& ds, FeaturePolicy policy, int degree_cap = 10);

// Writes the dataset back in the TU layout (canonical edge ordering, both
// directions). Re-parsing the result yields an identical Dataset.
void write_tu(const Dataset& ds, const std::filesystem::path& dir);

}  // namespace ssread
