#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gcrobust/graph.hpp"
#include "gcrobust/rng.hpp"

namespace gcr {

namespace detail {

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(line);
  }
  return lines;
}

// Splits on commas and whitespace.
inline std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ',' || line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ',' && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline long long parse_int(std::string_view tok, const std::string& where) {
  long long v = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) throw DataError(where + ": expected an integer, got '" + std::string(tok) + "'");
  return v;
}

inline double parse_double(std::string_view tok, const std::string& where) {
  const std::string s(tok);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw DataError(where + ": expected a number, got '" + s + "'");
  return v;
}

inline std::vector<long long> read_int_column(const std::filesystem::path& path) {
  std::vector<long long> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto toks = tokens(lines[i]);
    if (toks.size() != 1) throw DataError(path.filename().string() + ":" + std::to_string(i + 1) + ": expected one value");
    out.push_back(parse_int(toks[0], path.filename().string() + ":" + std::to_string(i + 1)));
  }
  return out;
}

// Maps arbitrary integer labels onto [0, K) in ascending order.
inline std::map<long long, int> contiguous_codes(const std::vector<long long>& values) {
  std::set<long long> uniq(values.begin(), values.end());
  std::map<long long, int> code;
  int next = 0;
  for (long long v : uniq) code[v] = next++;
  return code;
}

}  // namespace detail

inline constexpr int kDegreeFeatureCap = 32;

/// Loads a graph-benchmark directory in the common text layout:
///   <DS>_A.txt               one "i, j" line per directed edge, 1-indexed nodes
///   <DS>_graph_indicator.txt line k: graph id (1-indexed) of node k
///   <DS>_graph_labels.txt    line g: class of graph g
///   <DS>_node_labels.txt     optional, one integer per node (one-hot encoded)
///   <DS>_node_attributes.txt optional, comma-separated reals per node
/// Graph labels are remapped to contiguous classes. Edges are deduplicated
/// as undirected pairs and self-loops dropped. Without node labels or
/// attributes, nodes get degree one-hot features capped at 32.
inline GraphDataset load_tu_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  std::string prefix;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 6 && name.ends_with("_A.txt")) {
      prefix = name.substr(0, name.size() - 6);
      break;
    }
  }
  if (prefix.empty()) throw DataError("no *_A.txt file in " + dir.string());
  auto file = [&](const char* suffix) { return dir / (prefix + suffix); };
  for (const char* required : {"_graph_indicator.txt", "_graph_labels.txt"}) {
    if (!fs::exists(file(required))) throw DataError("missing mandatory file " + file(required).string());
  }

  const auto indicator = detail::read_int_column(file("_graph_indicator.txt"));
  const auto graph_labels = detail::read_int_column(file("_graph_labels.txt"));
  const auto num_graphs = static_cast<long long>(graph_labels.size());
  const auto num_nodes = indicator.size();

  // node k -> (graph, local index)
  std::vector<int> node_graph(num_nodes);
  std::vector<int> node_local(num_nodes);
  std::vector<int> graph_size(static_cast<std::size_t>(num_graphs), 0);
  for (std::size_t k = 0; k < num_nodes; ++k) {
    const long long g = indicator[k];
    if (g < 1 || g > num_graphs) {
      throw DataError("graph indicator line " + std::to_string(k + 1) + ": graph id " + std::to_string(g) +
                      " outside 1.." + std::to_string(num_graphs));
    }
    node_graph[k] = static_cast<int>(g - 1);
    node_local[k] = graph_size[static_cast<std::size_t>(g - 1)]++;
  }
  for (long long g = 0; g < num_graphs; ++g) {
    if (graph_size[static_cast<std::size_t>(g)] == 0) throw DataError("graph " + std::to_string(g + 1) + " has no nodes");
  }

  std::vector<std::set<std::pair<int, int>>> edge_sets(static_cast<std::size_t>(num_graphs));
  {
    const auto lines = detail::read_lines(file("_A.txt"));
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const std::string where = prefix + "_A.txt:" + std::to_string(i + 1);
      const auto toks = detail::tokens(lines[i]);
      if (toks.size() != 2) throw DataError(where + ": expected 'i, j'");
      const long long a = detail::parse_int(toks[0], where);
      const long long b = detail::parse_int(toks[1], where);
      if (a < 1 || b < 1 || static_cast<std::size_t>(a) > num_nodes || static_cast<std::size_t>(b) > num_nodes) {
        throw DataError(where + ": node id out of range");
      }
      const auto ia = static_cast<std::size_t>(a - 1);
      const auto ib = static_cast<std::size_t>(b - 1);
      if (node_graph[ia] != node_graph[ib]) throw DataError(where + ": edge joins two different graphs");
      if (ia == ib) continue;
      int u = node_local[ia];
      int v = node_local[ib];
      if (u > v) std::swap(u, v);
      edge_sets[static_cast<std::size_t>(node_graph[ia])].insert({u, v});
    }
  }

  // Optional node features.
  std::vector<std::vector<double>> node_feats(num_nodes);
  bool have_features = false;
  if (fs::exists(file("_node_labels.txt"))) {
    const auto node_labels = detail::read_int_column(file("_node_labels.txt"));
    if (node_labels.size() != num_nodes) throw DataError("node label count does not match graph indicator");
    const auto codes = detail::contiguous_codes(node_labels);
    for (std::size_t k = 0; k < num_nodes; ++k) {
      node_feats[k].assign(codes.size(), 0.0);
      node_feats[k][static_cast<std::size_t>(codes.at(node_labels[k]))] = 1.0;
    }
    have_features = true;
  }
  if (fs::exists(file("_node_attributes.txt"))) {
    const auto lines = detail::read_lines(file("_node_attributes.txt"));
    if (lines.size() != num_nodes) throw DataError("node attribute count does not match graph indicator");
    std::size_t width = 0;
    for (std::size_t k = 0; k < num_nodes; ++k) {
      const auto toks = detail::tokens(lines[k]);
      if (k == 0) width = toks.size();
      if (toks.size() != width || width == 0) throw DataError("node attributes: ragged row " + std::to_string(k + 1));
      for (auto t : toks) node_feats[k].push_back(detail::parse_double(t, prefix + "_node_attributes.txt:" + std::to_string(k + 1)));
    }
    have_features = true;
  }

  const auto label_codes = detail::contiguous_codes(graph_labels);
  GraphDataset ds;
  ds.num_classes = static_cast<int>(label_codes.size());

  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(num_graphs));
  for (std::size_t k = 0; k < num_nodes; ++k) members[static_cast<std::size_t>(node_graph[k])].push_back(k);

  ds.graphs.reserve(static_cast<std::size_t>(num_graphs));
  for (long long g = 0; g < num_graphs; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    std::vector<Edge> edges;
    for (const auto& [u, v] : edge_sets[gi]) edges.push_back({u, v});
    const int n = graph_size[gi];
    Matrix feats;
    if (have_features) {
      feats.resize(n, static_cast<Eigen::Index>(node_feats[members[gi][0]].size()));
      for (const std::size_t k : members[gi]) {
        const auto& row = node_feats[k];
        for (std::size_t c = 0; c < row.size(); ++c) feats(node_local[k], static_cast<Eigen::Index>(c)) = row[c];
      }
    } else {
      feats = degree_onehot_features(n, edges, kDegreeFeatureCap);
    }
    ds.graphs.emplace_back(std::move(feats), std::move(edges), label_codes.at(graph_labels[gi]), g);
  }
  ds.reset_labels();
  return ds;
}

/// Writes a dataset in the layout read by load_tu_dataset. Features go to
/// <name>_node_attributes.txt so they round-trip exactly.
inline void write_tu_dataset(const GraphDataset& ds, const std::filesystem::path& dir, const std::string& name) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const char* suffix) {
    std::ofstream out(dir / (name + suffix));
    if (!out) throw DataError("cannot write " + (dir / (name + suffix)).string());
    return out;
  };
  auto a = open("_A.txt");
  auto ind = open("_graph_indicator.txt");
  auto lab = open("_graph_labels.txt");
  auto attr = open("_node_attributes.txt");
  long long base = 0;
  char buf[64];
  for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
    const Graph& graph = ds.graphs[g];
    for (int i = 0; i < graph.num_nodes(); ++i) {
      ind << (g + 1) << '\n';
      for (int c = 0; c < graph.feature_dim(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", graph.features()(i, c));
        attr << (c ? ", " : "") << buf;
      }
      attr << '\n';
    }
    for (const auto& e : graph.edges()) {
      a << (base + e.u + 1) << ", " << (base + e.v + 1) << '\n';
      a << (base + e.v + 1) << ", " << (base + e.u + 1) << '\n';
    }
    lab << ds.true_labels[g] << '\n';
    base += graph.num_nodes();
  }
}

/// Synthetic motif benchmark. Each graph is an Erdős–Rényi background with
/// planted copies of its class motif: class c plants a structure on
/// 4 + c/2 nodes, a cycle for even c and a clique for odd c (so class 0 is
/// a 4-cycle and class 1 a 4-clique). Node features are capped degree
/// one-hots.
struct SyntheticSpec {
  int num_graphs = 500;
  int classes = 2;
  int min_nodes = 12;
  int max_nodes = 20;
  double edge_prob = 0.1;
  int motifs_per_graph = 1;
  int max_degree_feature = 8;
  std::uint64_t seed = 0;

  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

inline int motif_size(int cls) { return 4 + cls / 2; }
inline bool motif_is_clique(int cls) { return cls % 2 == 1; }

inline Graph synthetic_graph(int cls, const SyntheticSpec& spec, Rng& rng, std::int64_t id) {
  const int n = spec.min_nodes + rng.below(spec.max_nodes - spec.min_nodes + 1);
  std::set<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.bernoulli(spec.edge_prob)) edges.insert({i, j});
  const int k = motif_size(cls);
  std::vector<int> nodes(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) nodes[static_cast<std::size_t>(i)] = i;
  for (int m = 0; m < spec.motifs_per_graph; ++m) {
    rng.shuffle(std::span<int>(nodes));
    auto link = [&](int a, int b) { edges.insert({std::min(a, b), std::max(a, b)}); };
    if (motif_is_clique(cls)) {
      for (int a = 0; a < k; ++a)
        for (int b = a + 1; b < k; ++b) link(nodes[static_cast<std::size_t>(a)], nodes[static_cast<std::size_t>(b)]);
    } else {
      for (int a = 0; a < k; ++a) link(nodes[static_cast<std::size_t>(a)], nodes[static_cast<std::size_t>((a + 1) % k)]);
    }
  }
  std::vector<Edge> list;
  for (const auto& [u, v] : edges) list.push_back({u, v});
  Matrix feats = degree_onehot_features(n, list, spec.max_degree_feature);
  return Graph(std::move(feats), std::move(list), cls, id);
}

/// Label-balanced synthetic dataset (graph i has class i mod C before a
/// seeded shuffle of the order). Deterministic in the seed.
inline GraphDataset gen_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw ConfigError("synthetic: need at least two classes");
  if (spec.num_graphs < 1) throw ConfigError("synthetic: need at least one graph");
  if (spec.min_nodes < 1 || spec.max_nodes < spec.min_nodes) throw ConfigError("synthetic: invalid node range");
  if (spec.min_nodes < motif_size(spec.classes - 1)) throw ConfigError("synthetic: graphs too small for the largest motif");
  if (!(spec.edge_prob >= 0.0 && spec.edge_prob <= 1.0)) throw ConfigError("synthetic: edge probability outside [0, 1]");
  if (spec.motifs_per_graph < 0 || spec.max_degree_feature < 1) throw ConfigError("synthetic: invalid motif/feature settings");

  std::vector<int> classes(static_cast<std::size_t>(spec.num_graphs));
  for (int i = 0; i < spec.num_graphs; ++i) classes[static_cast<std::size_t>(i)] = i % spec.classes;
  Rng order(derive_seed(spec.seed, "synthetic.order"));
  order.shuffle(std::span<int>(classes));

  GraphDataset ds;
  ds.num_classes = spec.classes;
  ds.graphs.reserve(classes.size());
  for (int i = 0; i < spec.num_graphs; ++i) {
    Rng rng(derive_seed(derive_seed(spec.seed, "synthetic.graph"), static_cast<std::uint64_t>(i)));
    ds.graphs.push_back(synthetic_graph(classes[static_cast<std::size_t>(i)], spec, rng, i));
  }
  ds.reset_labels();
  return ds;
}

/// Stratified seeded split: within each true class the members are shuffled
/// and the first round(fraction · count) go to training. Both index lists
/// come back sorted.
inline void stratified_split(GraphDataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw ConfigError("train fraction must lie in (0, 1]");
  ds.train_idx.clear();
  ds.test_idx.clear();
  for (int c = 0; c < ds.num_classes; ++c) {
    std::vector<int> members;
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (ds.true_labels[i] == c) members.push_back(static_cast<int>(i));
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    rng.shuffle(std::span<int>(members));
    const auto cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(members.size())));
    for (std::size_t k = 0; k < members.size(); ++k) (k < cut ? ds.train_idx : ds.test_idx).push_back(members[k]);
  }
  std::sort(ds.train_idx.begin(), ds.train_idx.end());
  std::sort(ds.test_idx.begin(), ds.test_idx.end());
}

/// Keeps a stratified seeded fraction of the graphs (ids preserved).
inline GraphDataset subsample(const GraphDataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("subsample fraction must lie in (0, 1]");
  if (fraction == 1.0) return ds;
  GraphDataset tmp = ds;
  stratified_split(tmp, fraction, seed);
  GraphDataset out;
  out.num_classes = ds.num_classes;
  for (int i : tmp.train_idx) out.graphs.push_back(ds.graphs[static_cast<std::size_t>(i)]);
  out.reset_labels();
  return out;
}

}  // namespace gcr
