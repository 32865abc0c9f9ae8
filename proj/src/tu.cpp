#include "ssread/tu.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>

namespace ssread {

int Graph::degree(int n) const {
  int d = 0;
  for (const auto& [u, v] : edges) d += (u == n) + (v == n);
  return d;
}

namespace {

[[noreturn]] void fail(const std::string& file, int line_no, const std::string& what) {
  throw TuParseError(file + ":" + std::to_string(line_no) + ": " + what);
}

long parse_int(std::string_view token, const std::string& file, int line_no) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (*(last - 1) == ' ' || *(last - 1) == '\t' || *(last - 1) == '\r')) --last;
  long value = 0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last)
    fail(file, line_no, "expected integer, got '" + std::string(token) + "'");
  return value;
}

// Reads a whole file of integer lines; `arity` tokens per line, comma separated.
std::vector<std::vector<long>> read_int_lines(const std::filesystem::path& path, int arity,
                                              bool required) {
  std::ifstream in(path);
  if (!in) {
    if (required) throw TuParseError("missing required file: " + path.string());
    return {};
  }
  const std::string fname = path.filename().string();
  std::vector<std::vector<long>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv(line);
    while (!sv.empty() && (sv.back() == '\r' || sv.back() == ' ' || sv.back() == '\t'))
      sv.remove_suffix(1);
    if (sv.empty()) continue;  // tolerate blank (trailing) lines
    std::vector<long> row;
    std::size_t start = 0;
    for (int t = 0; t < arity; ++t) {
      std::size_t comma = (t + 1 < arity) ? sv.find(',', start) : std::string_view::npos;
      if (t + 1 < arity && comma == std::string_view::npos)
        fail(fname, line_no, "expected " + std::to_string(arity) + " comma-separated fields");
      std::string_view token = sv.substr(start, comma == std::string_view::npos ? sv.size() - start
                                                                                : comma - start);
      row.push_back(parse_int(token, fname, line_no));
      start = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Dataset parse_tu(const std::filesystem::path& dir, const std::string& name, FeaturePolicy policy,
                 int degree_cap) {
  const auto file = [&](const char* suffix) { return dir / (name + suffix); };

  const auto indicator = read_int_lines(file("_graph_indicator.txt"), 1, true);
  const auto edge_rows = read_int_lines(file("_A.txt"), 2, true);
  const auto label_rows = read_int_lines(file("_graph_labels.txt"), 1, true);
  const auto node_label_rows = read_int_lines(file("_node_labels.txt"), 1, false);

  const int total_nodes = static_cast<int>(indicator.size());
  const int num_graphs = static_cast<int>(label_rows.size());
  if (num_graphs == 0) throw TuParseError(name + ": empty graph label file");

  // Graph ids are 1-based and contiguous; node n belongs to indicator[n].
  std::vector<int> graph_of(total_nodes);
  std::vector<int> first_node(num_graphs + 1, 0);  // global id of each graph's first node
  std::vector<int> node_count(num_graphs, 0);
  for (int n = 0; n < total_nodes; ++n) {
    const long g = indicator[n][0];
    if (g < 1 || g > num_graphs)
      fail(name + "_graph_indicator.txt", n + 1,
           "graph id " + std::to_string(g) + " out of range [1," + std::to_string(num_graphs) + "]");
    if (n > 0 && g < indicator[n - 1][0])
      fail(name + "_graph_indicator.txt", n + 1, "graph ids must be non-decreasing");
    graph_of[n] = static_cast<int>(g) - 1;
    ++node_count[g - 1];
  }
  // TU files list nodes grouped by graph in order.
  for (int g = 0; g < num_graphs; ++g) first_node[g + 1] = first_node[g] + node_count[g];

  Dataset ds;
  ds.name = name;
  ds.graphs.resize(num_graphs);
  for (int g = 0; g < num_graphs; ++g) ds.graphs[g].num_nodes = node_count[g];

  if (!node_label_rows.empty()) {
    if (static_cast<int>(node_label_rows.size()) != total_nodes)
      throw TuParseError(name + "_node_labels.txt: expected " + std::to_string(total_nodes) +
                         " lines, got " + std::to_string(node_label_rows.size()));
    for (int g = 0; g < num_graphs; ++g) ds.graphs[g].node_labels.reserve(node_count[g]);
    for (int n = 0; n < total_nodes; ++n)
      ds.graphs[graph_of[n]].node_labels.push_back(static_cast<int>(node_label_rows[n][0]));
  }

  // Merge the duplicated directed pairs into undirected edges.
  std::vector<std::set<std::pair<int, int>>> edge_sets(num_graphs);
  for (std::size_t i = 0; i < edge_rows.size(); ++i) {
    const long u1 = edge_rows[i][0], v1 = edge_rows[i][1];
    const int line_no = static_cast<int>(i) + 1;
    if (u1 < 1 || u1 > total_nodes || v1 < 1 || v1 > total_nodes)
      fail(name + "_A.txt", line_no, "node id out of range");
    const int u = static_cast<int>(u1) - 1, v = static_cast<int>(v1) - 1;
    const int g = graph_of[u];
    if (graph_of[v] != g)
      fail(name + "_A.txt", line_no, "edge endpoints belong to different graphs");
    if (u == v) fail(name + "_A.txt", line_no, "self-loop in input");
    const int lu = u - first_node[g], lv = v - first_node[g];
    edge_sets[g].insert({std::min(lu, lv), std::max(lu, lv)});
  }
  for (int g = 0; g < num_graphs; ++g)
    ds.graphs[g].edges.assign(edge_sets[g].begin(), edge_sets[g].end());

  // Remap graph labels to [0, C) preserving sorted order.
  std::set<long> label_values;
  for (const auto& row : label_rows) label_values.insert(row[0]);
  std::map<long, int> label_map;
  for (long v : label_values) label_map.emplace(v, static_cast<int>(label_map.size()));
  ds.num_classes = static_cast<int>(label_map.size());
  for (int g = 0; g < num_graphs; ++g) ds.graphs[g].label = label_map.at(label_rows[g][0]);

  build_features(ds, policy, degree_cap);
  return ds;
}

void build_features(Dataset& ds, FeaturePolicy policy, int degree_cap) {
  const bool have_node_labels =
      !ds.graphs.empty() && std::all_of(ds.graphs.begin(), ds.graphs.end(), [](const Graph& g) {
        return static_cast<int>(g.node_labels.size()) == g.num_nodes;
      });
  if (policy == FeaturePolicy::Auto)
    policy = have_node_labels ? FeaturePolicy::NodeLabelOneHot : FeaturePolicy::ConstantOne;

  switch (policy) {
    case FeaturePolicy::NodeLabelOneHot: {
      if (!have_node_labels)
        throw TuParseError(ds.name + ": one-hot features requested but node labels are absent");
      std::set<int> values;
      for (const Graph& g : ds.graphs) values.insert(g.node_labels.begin(), g.node_labels.end());
      std::map<int, int> index;
      for (int v : values) index.emplace(v, static_cast<int>(index.size()));
      ds.feature_dim = static_cast<int>(index.size());
      for (Graph& g : ds.graphs) {
        g.features = Matrix(g.num_nodes, ds.feature_dim);
        for (int n = 0; n < g.num_nodes; ++n) g.features(n, index.at(g.node_labels[n])) = 1.0;
      }
      break;
    }
    case FeaturePolicy::ConstantOne: {
      ds.feature_dim = 1;
      for (Graph& g : ds.graphs) {
        g.features = Matrix(g.num_nodes, 1);
        g.features.fill(1.0);
      }
      break;
    }
    case FeaturePolicy::DegreeOneHot: {
      ds.feature_dim = degree_cap + 1;
      for (Graph& g : ds.graphs) {
        std::vector<int> deg(g.num_nodes, 0);
        for (const auto& [u, v] : g.edges) {
          ++deg[u];
          ++deg[v];
        }
        g.features = Matrix(g.num_nodes, ds.feature_dim);
        for (int n = 0; n < g.num_nodes; ++n) g.features(n, std::min(deg[n], degree_cap)) = 1.0;
      }
      break;
    }
    case FeaturePolicy::Auto:
      break;  // resolved above
  }
}

void write_tu(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto file = [&](const char* suffix) { return dir / (ds.name + suffix); };

  std::ofstream fa(file("_A.txt")), fi(file("_graph_indicator.txt")),
      fl(file("_graph_labels.txt"));
  const bool have_node_labels = std::all_of(
      ds.graphs.begin(), ds.graphs.end(),
      [](const Graph& g) { return static_cast<int>(g.node_labels.size()) == g.num_nodes; });
  std::ofstream fn;
  if (have_node_labels) fn.open(file("_node_labels.txt"));

  int base = 0;
  for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
    const Graph& graph = ds.graphs[g];
    fl << graph.label << "\n";
    for (int n = 0; n < graph.num_nodes; ++n) {
      fi << (g + 1) << "\n";
      if (have_node_labels) fn << graph.node_labels[n] << "\n";
    }
    // Both directions, ascending (row, col).
    std::vector<std::pair<int, int>> directed;
    directed.reserve(graph.edges.size() * 2);
    for (const auto& [u, v] : graph.edges) {
      directed.emplace_back(u, v);
      directed.emplace_back(v, u);
    }
    std::sort(directed.begin(), directed.end());
    for (const auto& [u, v] : directed) fa << (base + u + 1) << ", " << (base + v + 1) << "\n";
    base += graph.num_nodes;
  }
}

}  // namespace ssread
