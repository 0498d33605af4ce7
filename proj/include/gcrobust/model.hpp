#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gcrobust/autodiff.hpp"
#include "gcrobust/graph.hpp"
#include "gcrobust/rng.hpp"

namespace gcr {

enum class LayerKind { GCN, GIN };
enum class ReadoutMode { Sum, Mean };

inline std::string to_string(LayerKind k) { return k == LayerKind::GCN ? "gcn" : "gin"; }
inline std::string to_string(ReadoutMode r) { return r == ReadoutMode::Sum ? "sum" : "mean"; }
inline std::string to_string(Propagation p) {
  switch (p) {
    case Propagation::NormAdjacency: return "norm_adjacency";
    case Propagation::Laplacian: return "laplacian";
    case Propagation::Adjacency: return "adjacency";
  }
  return "?";
}

struct ModelConfig {
  LayerKind kind = LayerKind::GIN;
  int input_dim = 1;
  int hidden = 300;
  int layers = 5;
  int num_classes = 2;
  std::optional<ReadoutMode> readout;  // unset: sum for GIN, mean for GCN
  Propagation gcn_propagation = Propagation::NormAdjacency;
  double gin_epsilon = 0.0;
  bool train_epsilon = false;

  ReadoutMode resolved_readout() const {
    if (readout) return *readout;
    return kind == LayerKind::GIN ? ReadoutMode::Sum : ReadoutMode::Mean;
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// One message-passing layer with square W1, W2 (hidden x hidden) and, for
/// GIN, the self-weight epsilon.
struct GnnLayer {
  LayerKind kind = LayerKind::GIN;
  Parameter w1;
  Parameter w2;
  Parameter epsilon;  // 1x1
};

/// A prepared mini-batch: the block-diagonal graph plus its sparse
/// propagation operator.
struct BatchInput {
  BlockGraph block;
  std::shared_ptr<const SparseMatrix> propagation;
};

inline BatchInput prepare_batch(BlockGraph block, const ModelConfig& cfg) {
  const Propagation kind = cfg.kind == LayerKind::GIN ? Propagation::Adjacency : cfg.gcn_propagation;
  auto op = std::make_shared<const SparseMatrix>(propagation_operator(block.num_nodes(), block.edges, kind));
  return BatchInput{std::move(block), std::move(op)};
}

/// H' = relu(P · H · W1) · W2
inline Var gcn_forward(Tape& tape, GnnLayer& layer, Var h, const std::shared_ptr<const SparseMatrix>& prop) {
  Var w1 = tape.param(layer.w1);
  Var w2 = tape.param(layer.w2);
  Var mixed = tape.spmm(prop, h);
  return tape.matmul(tape.relu(tape.matmul(mixed, w1)), w2);
}

/// H' = relu(relu((1 + eps) H + A H) · W1) · W2
inline Var gin_forward(Tape& tape, GnnLayer& layer, Var h, const std::shared_ptr<const SparseMatrix>& adjacency,
                       bool train_epsilon) {
  Var w1 = tape.param(layer.w1);
  Var w2 = tape.param(layer.w2);
  Var self;
  if (train_epsilon) {
    Var eps = tape.param(layer.epsilon);
    self = tape.add(h, tape.mul_scalar(h, eps));
  } else {
    self = tape.scale(h, 1.0 + layer.epsilon.value(0, 0));
  }
  Var agg = tape.relu(tape.add(self, tape.spmm(adjacency, h)));
  return tape.matmul(tape.relu(tape.matmul(agg, w1)), w2);
}

inline Var readout(Tape& tape, Var h, const BlockGraph& block, ReadoutMode mode) {
  return tape.segment_reduce(h, block.component_offsets, block.component_sizes, mode == ReadoutMode::Mean);
}

struct ForwardResult {
  Var logits;            // batch x C
  Var graph_embeddings;  // batch x hidden, pooled
  Var node_reps;         // N_tot x hidden, output of the last layer
  std::vector<Var> layer_outputs;  // [0] is the input embedding, [l+1] layer l
};

/// Input projection (m -> hidden, with bias), a stack of GCN/GIN layers,
/// readout, and a linear classifier head (with bias).
class Model {
 public:
  Model() = default;

  Model(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    if (cfg_.hidden < 1 || cfg_.layers < 0 || cfg_.input_dim < 1 || cfg_.num_classes < 1) {
      throw DimensionError("model: invalid dimensions");
    }
    Rng rng(seed);
    auto uniform = [&rng](Eigen::Index r, Eigen::Index c, double bound) {
      Matrix m(r, c);
      for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.uniform(-bound, bound);
      return m;
    };
    const int h = cfg_.hidden;
    const double square_bound = 1.0 / std::sqrt(static_cast<double>(h));
    auto symmetric = [&](const std::string& name) {
      Matrix u = uniform(h, h, square_bound);
      return Parameter(name, (u + u.transpose()) / std::sqrt(2.0));
    };

    embed_w = Parameter("embed.w", uniform(cfg_.input_dim, h, 1.0 / std::sqrt(static_cast<double>(cfg_.input_dim))));
    embed_b = Parameter("embed.b", Matrix::Zero(1, h));
    for (int l = 0; l < cfg_.layers; ++l) {
      GnnLayer layer;
      layer.kind = cfg_.kind;
      const std::string prefix = "layer" + std::to_string(l);
      layer.w1 = symmetric(prefix + ".w1");
      layer.w2 = symmetric(prefix + ".w2");
      layer.epsilon = Parameter(prefix + ".eps", Matrix::Constant(1, 1, cfg_.gin_epsilon));
      layers_.push_back(std::move(layer));
    }
    head_w = Parameter("head.w", uniform(h, cfg_.num_classes, square_bound));
    head_b = Parameter("head.b", Matrix::Zero(1, cfg_.num_classes));
  }

  const ModelConfig& config() const { return cfg_; }
  std::vector<GnnLayer>& layers() { return layers_; }
  const std::vector<GnnLayer>& layers() const { return layers_; }

  /// Trainable parameters in a fixed order (embed, layers, head).
  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out{&embed_w, &embed_b};
    for (auto& layer : layers_) {
      out.push_back(&layer.w1);
      out.push_back(&layer.w2);
      if (cfg_.kind == LayerKind::GIN && cfg_.train_epsilon) out.push_back(&layer.epsilon);
    }
    out.push_back(&head_w);
    out.push_back(&head_b);
    return out;
  }

  /// Every stored array, including a frozen epsilon; used by checkpoints.
  std::vector<Parameter*> state() {
    std::vector<Parameter*> out{&embed_w, &embed_b};
    for (auto& layer : layers_) {
      out.push_back(&layer.w1);
      out.push_back(&layer.w2);
      out.push_back(&layer.epsilon);
    }
    out.push_back(&head_w);
    out.push_back(&head_b);
    return out;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (const Parameter* p : parameters()) n += static_cast<std::size_t>(p->value.size());
    return n;
  }

  void zero_grad() {
    for (Parameter* p : parameters()) p->zero_grad();
  }

  ForwardResult forward(Tape& tape, const BatchInput& batch) {
    if (batch.block.features.cols() != cfg_.input_dim) {
      throw DimensionError("model: batch feature width " + std::to_string(batch.block.features.cols()) +
                           " != input_dim " + std::to_string(cfg_.input_dim));
    }
    ForwardResult out;
    Var x = tape.constant(batch.block.features);
    Var h = tape.add_row(tape.matmul(x, tape.param(embed_w)), tape.param(embed_b));
    out.layer_outputs.push_back(h);
    for (auto& layer : layers_) {
      h = cfg_.kind == LayerKind::GCN ? gcn_forward(tape, layer, h, batch.propagation)
                                      : gin_forward(tape, layer, h, batch.propagation, cfg_.train_epsilon);
      out.layer_outputs.push_back(h);
    }
    out.node_reps = h;
    out.graph_embeddings = readout(tape, h, batch.block, cfg_.resolved_readout());
    out.logits = tape.add_row(tape.matmul(out.graph_embeddings, tape.param(head_w)), tape.param(head_b));
    return out;
  }

  Parameter embed_w;
  Parameter embed_b;
  Parameter head_w;
  Parameter head_b;

 private:
  ModelConfig cfg_;
  std::vector<GnnLayer> layers_;
};

}  // namespace gcr
