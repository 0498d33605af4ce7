#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gcrobust/linalg.hpp"

namespace gcr {

/// Undirected edge stored once with u < v.
struct Edge {
  int u = 0;
  int v = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// One graph sample: node features (N x m), undirected simple edge list and
/// a class label. Immutable after construction.
class Graph {
 public:
  Graph() = default;

  /// Edges may be given in either orientation; they are canonicalized to
  /// u < v and sorted. Self-loops, duplicates and out-of-range endpoints are
  /// rejected.
  Graph(Matrix features, std::vector<Edge> edges, int label, std::int64_t id = 0)
      : features_(std::move(features)), edges_(std::move(edges)), label_(label), id_(id) {
    const auto n = num_nodes();
    if (n < 1) throw DataError("graph " + std::to_string(id_) + ": needs at least one node");
    if (features_.cols() < 1) throw DataError("graph " + std::to_string(id_) + ": needs at least one feature");
    if (!features_.allFinite()) throw DataError("graph " + std::to_string(id_) + ": non-finite feature");
    for (auto& e : edges_) {
      if (e.u == e.v) throw DataError("graph " + std::to_string(id_) + ": self-loop at node " + std::to_string(e.u));
      if (e.u > e.v) std::swap(e.u, e.v);
      if (e.u < 0 || e.v >= n) throw DataError("graph " + std::to_string(id_) + ": edge endpoint out of range");
    }
    std::sort(edges_.begin(), edges_.end());
    if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end()) {
      throw DataError("graph " + std::to_string(id_) + ": duplicate edge");
    }
  }

  int num_nodes() const { return static_cast<int>(features_.rows()); }
  int feature_dim() const { return static_cast<int>(features_.cols()); }
  const Matrix& features() const { return features_; }
  std::span<const Edge> edges() const { return edges_; }
  int label() const { return label_; }
  std::int64_t id() const { return id_; }

  std::vector<int> degrees() const {
    std::vector<int> deg(static_cast<std::size_t>(num_nodes()), 0);
    for (const auto& e : edges_) {
      ++deg[static_cast<std::size_t>(e.u)];
      ++deg[static_cast<std::size_t>(e.v)];
    }
    return deg;
  }

  Matrix adjacency() const {
    Matrix a = Matrix::Zero(num_nodes(), num_nodes());
    for (const auto& e : edges_) a(e.u, e.v) = a(e.v, e.u) = 1.0;
    return a;
  }

  Graph with_features(Matrix features) const {
    if (features.rows() != features_.rows()) throw DimensionError("with_features: row count mismatch");
    return Graph(std::move(features), edges_, label_, id_);
  }

 private:
  Matrix features_;
  std::vector<Edge> edges_;
  int label_ = 0;
  std::int64_t id_ = 0;
};

/// A collection of graphs plus label-noise bookkeeping and the train/test
/// split. `true_labels` mirror each graph's own label; `assigned_labels` are
/// what the learner sees.
struct GraphDataset {
  std::vector<Graph> graphs;
  int num_classes = 0;
  std::vector<int> true_labels;
  std::vector<int> assigned_labels;
  std::vector<bool> noise_mask;
  std::vector<int> train_idx;
  std::vector<int> test_idx;

  std::size_t size() const { return graphs.size(); }

  /// Populates labels from the graphs and clears noise.
  void reset_labels() {
    true_labels.clear();
    for (const auto& g : graphs) true_labels.push_back(g.label());
    assigned_labels = true_labels;
    noise_mask.assign(graphs.size(), false);
  }

  void set_assigned_labels(std::vector<int> labels) {
    if (labels.size() != graphs.size()) throw DimensionError("assigned labels: size mismatch");
    assigned_labels = std::move(labels);
    noise_mask.assign(graphs.size(), false);
    for (std::size_t i = 0; i < graphs.size(); ++i) noise_mask[i] = assigned_labels[i] != true_labels[i];
  }

  void validate() const {
    const auto n = graphs.size();
    if (true_labels.size() != n || assigned_labels.size() != n || noise_mask.size() != n) {
      throw DataError("dataset: label arrays do not match graph count");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (true_labels[i] < 0 || true_labels[i] >= num_classes) throw DataError("dataset: true label out of range");
      if (assigned_labels[i] < 0 || assigned_labels[i] >= num_classes) throw DataError("dataset: assigned label out of range");
      if (noise_mask[i] != (assigned_labels[i] != true_labels[i])) throw DataError("dataset: noise mask inconsistent");
    }
    std::vector<char> seen(n, 0);
    for (int i : train_idx) {
      if (i < 0 || static_cast<std::size_t>(i) >= n || seen[static_cast<std::size_t>(i)]) throw DataError("dataset: bad train index");
      seen[static_cast<std::size_t>(i)] = 1;
    }
    for (int i : test_idx) {
      if (i < 0 || static_cast<std::size_t>(i) >= n || seen[static_cast<std::size_t>(i)]) throw DataError("dataset: bad or overlapping test index");
      seen[static_cast<std::size_t>(i)] = 2;
    }
  }
};

/// A set of graphs viewed as one disconnected graph: stacked features and
/// block-diagonal adjacency (edges reindexed by component offset).
struct BlockGraph {
  Matrix features;
  std::vector<Edge> edges;
  std::vector<int> component_offsets;
  std::vector<int> component_sizes;
  std::vector<int> labels;
  std::vector<std::int64_t> ids;

  int num_nodes() const { return static_cast<int>(features.rows()); }
  int num_components() const { return static_cast<int>(component_sizes.size()); }

  Matrix adjacency() const {
    Matrix a = Matrix::Zero(num_nodes(), num_nodes());
    for (const auto& e : edges) a(e.u, e.v) = a(e.v, e.u) = 1.0;
    return a;
  }

  /// Recovers component i as a standalone graph.
  Graph component(int i) const {
    const int off = component_offsets.at(static_cast<std::size_t>(i));
    const int size = component_sizes.at(static_cast<std::size_t>(i));
    std::vector<Edge> local;
    for (const auto& e : edges) {
      if (e.u >= off && e.u < off + size) local.push_back({e.u - off, e.v - off});
    }
    return Graph(features.middleRows(off, size), std::move(local), labels[static_cast<std::size_t>(i)],
                 ids[static_cast<std::size_t>(i)]);
  }
};

template <typename GraphRange>
BlockGraph block_diagonal(const GraphRange& graphs) {
  BlockGraph out;
  int total = 0;
  int dim = -1;
  for (const Graph& g : graphs) {
    if (dim >= 0 && g.feature_dim() != dim) {
      throw DimensionError("block_diagonal: feature dimension " + std::to_string(g.feature_dim()) +
                           " differs from " + std::to_string(dim));
    }
    dim = g.feature_dim();
    out.component_offsets.push_back(total);
    out.component_sizes.push_back(g.num_nodes());
    out.labels.push_back(g.label());
    out.ids.push_back(g.id());
    total += g.num_nodes();
  }
  out.features.resize(total, std::max(dim, 0));
  std::size_t c = 0;
  for (const Graph& g : graphs) {
    const int off = out.component_offsets[c++];
    out.features.middleRows(off, g.num_nodes()) = g.features();
    for (const auto& e : g.edges()) out.edges.push_back({e.u + off, e.v + off});
  }
  return out;
}

inline BlockGraph block_diagonal_ptrs(std::span<const Graph* const> graphs) {
  std::vector<std::reference_wrapper<const Graph>> refs;
  refs.reserve(graphs.size());
  for (const Graph* g : graphs) refs.emplace_back(*g);
  return block_diagonal(refs);
}

namespace detail {

inline std::vector<int> degrees_of(int n, std::span<const Edge> edges) {
  std::vector<int> deg(static_cast<std::size_t>(n), 0);
  for (const auto& e : edges) {
    ++deg[static_cast<std::size_t>(e.u)];
    ++deg[static_cast<std::size_t>(e.v)];
  }
  return deg;
}

}  // namespace detail

/// Δ = I − D^{-1/2} A D^{-1/2}. Isolated nodes get an all-zero row and
/// column, so they carry no energy.
inline Matrix normalized_laplacian(int n, std::span<const Edge> edges) {
  const auto deg = detail::degrees_of(n, edges);
  Matrix lap = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (deg[static_cast<std::size_t>(i)] > 0) lap(i, i) = 1.0;
  }
  for (const auto& e : edges) {
    const double w = -1.0 / std::sqrt(static_cast<double>(deg[static_cast<std::size_t>(e.u)]) *
                                      static_cast<double>(deg[static_cast<std::size_t>(e.v)]));
    lap(e.u, e.v) = w;
    lap(e.v, e.u) = w;
  }
  return lap;
}

inline Matrix normalized_laplacian(const Graph& g) { return normalized_laplacian(g.num_nodes(), g.edges()); }
inline Matrix normalized_laplacian(const BlockGraph& b) { return normalized_laplacian(b.num_nodes(), b.edges); }

/// Row i is one-hot of min(deg(i), max_degree); width max_degree + 1.
inline Matrix degree_onehot_features(int n, std::span<const Edge> edges, int max_degree) {
  if (max_degree < 1) throw DimensionError("degree_onehot_features: max_degree must be >= 1");
  const auto deg = detail::degrees_of(n, edges);
  Matrix out = Matrix::Zero(n, max_degree + 1);
  for (int i = 0; i < n; ++i) out(i, std::min(deg[static_cast<std::size_t>(i)], max_degree)) = 1.0;
  return out;
}

inline Matrix degree_onehot_features(const Graph& g, int max_degree) {
  return degree_onehot_features(g.num_nodes(), g.edges(), max_degree);
}

/// Message-passing operators, built sparse for the training engine.
enum class Propagation {
  NormAdjacency,  // D̃^{-1/2}(A + I)D̃^{-1/2}, the usual GCN operator
  Laplacian,      // I − D^{-1/2} A D^{-1/2}, zero rows on isolated nodes
  Adjacency,      // raw A, used by GIN's neighbour sum
};

inline SparseMatrix propagation_operator(int n, std::span<const Edge> edges, Propagation kind) {
  const auto deg = detail::degrees_of(n, edges);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(edges.size() * 2 + static_cast<std::size_t>(n));
  switch (kind) {
    case Propagation::Adjacency:
      for (const auto& e : edges) {
        trip.emplace_back(e.u, e.v, 1.0);
        trip.emplace_back(e.v, e.u, 1.0);
      }
      break;
    case Propagation::NormAdjacency:
      for (int i = 0; i < n; ++i) trip.emplace_back(i, i, 1.0 / (deg[static_cast<std::size_t>(i)] + 1.0));
      for (const auto& e : edges) {
        const double w = 1.0 / std::sqrt((deg[static_cast<std::size_t>(e.u)] + 1.0) *
                                         (deg[static_cast<std::size_t>(e.v)] + 1.0));
        trip.emplace_back(e.u, e.v, w);
        trip.emplace_back(e.v, e.u, w);
      }
      break;
    case Propagation::Laplacian:
      for (int i = 0; i < n; ++i) {
        if (deg[static_cast<std::size_t>(i)] > 0) trip.emplace_back(i, i, 1.0);
      }
      for (const auto& e : edges) {
        const double w = -1.0 / std::sqrt(static_cast<double>(deg[static_cast<std::size_t>(e.u)]) *
                                          static_cast<double>(deg[static_cast<std::size_t>(e.v)]));
        trip.emplace_back(e.u, e.v, w);
        trip.emplace_back(e.v, e.u, w);
      }
      break;
  }
  SparseMatrix s(n, n);
  s.setFromTriplets(trip.begin(), trip.end());
  return s;
}

}  // namespace gcr
