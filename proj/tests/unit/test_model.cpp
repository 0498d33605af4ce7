#include <gtest/gtest.h>

#include "gcrobust/model.hpp"
#include "gcrobust/selftest.hpp"

using namespace gcr;

namespace {

using Grid = std::vector<std::vector<double>>;

Grid to_grid(const Matrix& m) {
  Grid g(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) g[i][j] = m(i, j);
  return g;
}

Grid mul(const Grid& a, const Grid& b) {
  Grid c(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

Grid relu(Grid a) {
  for (auto& row : a)
    for (double& v : row) v = std::max(v, 0.0);
  return a;
}

// Scalar-loop forward of one graph; P is the dense propagation operator.
std::vector<double> reference_logits(Model& model, const Graph& g, bool gin, double eps) {
  const int n = g.num_nodes();
  Grid prop(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  const auto deg = g.degrees();
  for (const auto& e : g.edges()) {
    const double w = gin ? 1.0 : 1.0 / std::sqrt((deg[e.u] + 1.0) * (deg[e.v] + 1.0));
    prop[e.u][e.v] = prop[e.v][e.u] = w;
  }
  for (int i = 0; i < n; ++i) prop[i][i] = gin ? 1.0 + eps : 1.0 / (deg[i] + 1.0);

  Grid h = mul(to_grid(g.features()), to_grid(model.embed_w.value));
  for (auto& row : h)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += model.embed_b.value(0, static_cast<Eigen::Index>(j));
  for (auto& layer : model.layers()) {
    Grid mixed = mul(prop, h);
    if (gin) mixed = relu(mixed);
    h = mul(relu(mul(mixed, to_grid(layer.w1.value))), to_grid(layer.w2.value));
  }
  std::vector<double> pooled(h[0].size(), 0.0);
  for (const auto& row : h)
    for (std::size_t j = 0; j < row.size(); ++j) pooled[j] += gin ? row[j] : row[j] / n;
  std::vector<double> logits(static_cast<std::size_t>(model.config().num_classes));
  for (std::size_t c = 0; c < logits.size(); ++c) {
    logits[c] = model.head_b.value(0, static_cast<Eigen::Index>(c));
    for (std::size_t j = 0; j < pooled.size(); ++j) logits[c] += pooled[j] * model.head_w.value(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c));
  }
  return logits;
}

}  // namespace

class ModelReference : public ::testing::TestWithParam<LayerKind> {};

TEST_P(ModelReference, MatchesScalarLoops) {
  Rng rng(31);
  for (int t = 0; t < 10; ++t) {
    ModelConfig mc;
    mc.kind = GetParam();
    mc.input_dim = 3;
    mc.hidden = 5;
    mc.layers = 3;
    mc.num_classes = 2;
    mc.gin_epsilon = 0.25;
    Model model(mc, 100 + t);
    model.embed_b.value = random_matrix(rng, 1, 5);
    model.head_b.value = random_matrix(rng, 1, 2);
    std::vector<Graph> graphs{random_graph(rng, 3, 3, 3), random_graph(rng, 2, 6, 3)};
    const BatchInput batch = prepare_batch(block_diagonal(graphs), mc);
    Tape tape(Tape::Mode::Inference);
    const Matrix& logits = tape.value(model.forward(tape, batch).logits);
    for (int g = 0; g < 2; ++g) {
      const auto ref = reference_logits(model, graphs[g], mc.kind == LayerKind::GIN, 0.25);
      for (int c = 0; c < 2; ++c) EXPECT_NEAR(logits(g, c), ref[c], 1e-12 * std::max(1.0, std::abs(ref[c])));
    }
  }
}

namespace gcr {
inline void PrintTo(LayerKind k, std::ostream* os) { *os << (k == LayerKind::GIN ? "gin" : "gcn"); }
}  // namespace gcr

INSTANTIATE_TEST_SUITE_P(Kinds, ModelReference, ::testing::Values(LayerKind::GIN, LayerKind::GCN),
                         [](const auto& info) { return info.param == LayerKind::GIN ? std::string("gin") : std::string("gcn"); });

TEST(Model, SquareSymmetricLayerWeights) {
  ModelConfig mc;
  mc.input_dim = 4;
  mc.hidden = 16;
  mc.layers = 5;
  Model model(mc, 1);
  ASSERT_EQ(model.layers().size(), 5u);
  for (const auto& layer : model.layers()) {
    EXPECT_EQ(layer.w1.value.rows(), 16);
    EXPECT_EQ(layer.w1.value.cols(), 16);
    EXPECT_LT((layer.w2.value - layer.w2.value.transpose()).norm(), 1e-15);
  }
  // embed 4·16 + 16, five layers of two 16×16, head 16·2 + 2
  EXPECT_EQ(model.parameter_count(), 4u * 16 + 16 + 5 * 2 * 256 + 16 * 2 + 2);
}

TEST(Model, SeedDeterminesInitialization) {
  ModelConfig mc;
  mc.input_dim = 3;
  mc.hidden = 8;
  Model a(mc, 9), b(mc, 9), c(mc, 10);
  EXPECT_EQ(a.layers()[2].w1.value, b.layers()[2].w1.value);
  EXPECT_NE(a.layers()[2].w1.value, c.layers()[2].w1.value);
}

TEST(Model, DefaultReadouts) {
  ModelConfig gin;
  gin.kind = LayerKind::GIN;
  ModelConfig gcn;
  gcn.kind = LayerKind::GCN;
  EXPECT_EQ(gin.resolved_readout(), ReadoutMode::Sum);
  EXPECT_EQ(gcn.resolved_readout(), ReadoutMode::Mean);
}

TEST(Model, TrainableEpsilonOnlyWhenRequested) {
  ModelConfig mc;
  mc.input_dim = 2;
  mc.hidden = 3;
  mc.layers = 2;
  Model frozen(mc, 0);
  mc.train_epsilon = true;
  Model trained(mc, 0);
  EXPECT_EQ(trained.parameters().size(), frozen.parameters().size() + 2);
  EXPECT_EQ(frozen.state().size(), trained.state().size());
}

TEST(Model, RejectsWrongFeatureWidth) {
  ModelConfig mc;
  mc.input_dim = 3;
  mc.hidden = 4;
  Model model(mc, 0);
  std::vector<Graph> graphs{Graph(Matrix::Ones(2, 2), {{0, 1}}, 0)};
  const BatchInput batch = prepare_batch(block_diagonal(graphs), mc);
  Tape tape;
  EXPECT_THROW(model.forward(tape, batch), DimensionError);
}
