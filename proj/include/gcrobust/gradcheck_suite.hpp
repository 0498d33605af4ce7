#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "gcrobust/autodiff.hpp"
#include "gcrobust/losses.hpp"
#include "gcrobust/model.hpp"
#include "gcrobust/selftest.hpp"

namespace gcr {

/// sum(x ⊙ r) for a fixed weight matrix r. Turns any matrix-valued op into
/// a scalar with a generic upstream gradient.
inline Var weighted_sum(Tape& tape, Var x, const Matrix& r) {
  const Matrix& xv = tape.value(x);
  if (xv.rows() != r.rows() || xv.cols() != r.cols()) throw DimensionError("weighted_sum: shape mismatch");
  Matrix out(1, 1);
  out(0, 0) = xv.cwiseProduct(r).sum();
  return tape.record(std::move(out), "weighted_sum", [x, r](Tape& t, const Matrix& g) { t.accumulate(x, g(0, 0) * r); });
}

struct GradcheckCase {
  std::string component;
  int instances = 0;
  double max_relative_error = 0.0;
  std::string worst;
};

struct GradcheckSuiteOptions {
  int instances = 20;
  double step = 1e-5;
  double floor = 1e-6;
  std::uint64_t seed = 11;
};

namespace detail {

struct RandomBatch {
  std::vector<Graph> graphs;
  BlockGraph block;
};

inline RandomBatch random_batch(Rng& rng, int feature_dim) {
  RandomBatch b;
  const int count = 1 + rng.below(3);
  for (int g = 0; g < count; ++g) b.graphs.push_back(random_graph(rng, 2, 7, feature_dim, 0.5));
  b.block = block_diagonal(b.graphs);
  return b;
}

inline void record_case(GradcheckCase& c, const GradcheckReport& r) {
  ++c.instances;
  if (r.max_relative_error >= c.max_relative_error) {
    c.max_relative_error = r.max_relative_error;
    c.worst = r.worst_parameter;
  }
}

}  // namespace detail

/// Central-difference checks for every layer, readout and loss, plus full
/// models. Each component is checked on `instances` random inputs.
inline std::vector<GradcheckCase> run_gradcheck_suite(const GradcheckSuiteOptions& opt = {}) {
  std::vector<GradcheckCase> cases;
  Rng rng(opt.seed);
  const int hidden = 4;
  const int classes = 3;

  auto check = [&](GradcheckCase& c, const std::function<Var(Tape&)>& build, std::vector<Parameter*> params) {
    auto loss = [&]() {
      Tape tape(Tape::Mode::Inference);
      return tape.value(build(tape))(0, 0);
    };
    auto analytic = [&]() {
      Tape tape;
      tape.backward(build(tape));
    };
    detail::record_case(c, gradcheck(loss, analytic, params, opt.step, opt.floor));
  };

  // Message-passing layers, with the input H as a checked leaf.
  struct LayerVariant {
    std::string name;
    LayerKind kind;
    Propagation prop;
    bool train_eps;
  };
  const std::vector<LayerVariant> variants = {
      {"gcn_layer[norm_adjacency]", LayerKind::GCN, Propagation::NormAdjacency, false},
      {"gcn_layer[laplacian]", LayerKind::GCN, Propagation::Laplacian, false},
      {"gin_layer[fixed_eps]", LayerKind::GIN, Propagation::Adjacency, false},
      {"gin_layer[trained_eps]", LayerKind::GIN, Propagation::Adjacency, true},
  };
  for (const auto& v : variants) {
    GradcheckCase c{v.name};
    for (int t = 0; t < opt.instances; ++t) {
      const auto b = detail::random_batch(rng, hidden);
      auto prop = std::make_shared<const SparseMatrix>(propagation_operator(b.block.num_nodes(), b.block.edges, v.prop));
      GnnLayer layer;
      layer.kind = v.kind;
      layer.w1 = Parameter("w1", random_matrix(rng, hidden, hidden));
      layer.w2 = Parameter("w2", random_matrix(rng, hidden, hidden));
      layer.epsilon = Parameter("eps", Matrix::Constant(1, 1, rng.uniform(-0.5, 0.5)));
      Parameter h("h", random_matrix(rng, b.block.num_nodes(), hidden));
      const Matrix r = random_matrix(rng, b.block.num_nodes(), hidden);
      std::vector<Parameter*> params{&layer.w1, &layer.w2, &h};
      if (v.train_eps) params.push_back(&layer.epsilon);
      check(c,
            [&](Tape& tape) {
              Var x = tape.param(h);
              Var out = v.kind == LayerKind::GCN ? gcn_forward(tape, layer, x, prop)
                                                 : gin_forward(tape, layer, x, prop, v.train_eps);
              return weighted_sum(tape, out, r);
            },
            params);
    }
    cases.push_back(c);
  }

  for (bool mean : {false, true}) {
    GradcheckCase c{mean ? "readout[mean]" : "readout[sum]"};
    for (int t = 0; t < opt.instances; ++t) {
      const auto b = detail::random_batch(rng, hidden);
      Parameter h("h", random_matrix(rng, b.block.num_nodes(), hidden));
      const Matrix r = random_matrix(rng, b.block.num_components(), hidden);
      check(c,
            [&](Tape& tape) {
              return weighted_sum(tape, readout(tape, tape.param(h), b.block, mean ? ReadoutMode::Mean : ReadoutMode::Sum),
                                  r);
            },
            {&h});
    }
    cases.push_back(c);
  }

  auto random_labels = [&](int n) {
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) labels.push_back(rng.below(classes));
    return labels;
  };

  {
    GradcheckCase c{"cross_entropy"};
    for (int t = 0; t < opt.instances; ++t) {
      const int n = 1 + rng.below(6);
      Parameter z("logits", 2.0 * random_matrix(rng, n, classes));
      const auto labels = random_labels(n);
      check(c, [&](Tape& tape) { return cross_entropy(tape, tape.param(z), labels); }, {&z});
    }
    cases.push_back(c);
  }

  auto random_gcod_state = [&](int n, std::vector<int>& labels, Matrix& emb, std::vector<double>& u) {
    labels = random_labels(n);
    emb = random_matrix(rng, n, hidden);
    u.clear();
    for (int i = 0; i < n; ++i) u.push_back(rng.uniform(0.05, 0.95));
    GcodState state(static_cast<std::size_t>(n), classes, hidden);
    refresh_class_stats(state, random_matrix(rng, n, hidden), labels);
    state.train_accuracy = rng.uniform(0.0, 1.0);
    return state;
  };

  {
    GradcheckCase c{"gcod_model_loss"};
    for (int t = 0; t < opt.instances; ++t) {
      const int n = 1 + rng.below(6);
      std::vector<int> labels;
      Matrix emb;
      std::vector<double> u;
      const GcodState state = random_gcod_state(n, labels, emb, u);
      Parameter z("logits", 2.0 * random_matrix(rng, n, classes));
      check(c, [&](Tape& tape) { return gcod_terms(tape, tape.param(z), emb, labels, u, state).model_loss; }, {&z});
    }
    cases.push_back(c);
  }

  {
    GradcheckCase c{"gcod_u_loss"};
    for (int t = 0; t < opt.instances; ++t) {
      const int n = 1 + rng.below(6);
      std::vector<int> labels;
      Matrix emb;
      std::vector<double> u0;
      const GcodState state = random_gcod_state(n, labels, emb, u0);
      const Matrix z = 2.0 * random_matrix(rng, n, classes);
      Parameter u("u", Eigen::Map<const Matrix>(u0.data(), n, 1));
      auto loss = [&]() {
        Tape tape(Tape::Mode::Inference);
        std::vector<double> uv(u.value.data(), u.value.data() + n);
        return tape.value(gcod_terms(tape, tape.constant(z), emb, labels, uv, state).u_loss)(0, 0);
      };
      auto analytic = [&]() {
        Tape tape;
        std::vector<double> uv(u.value.data(), u.value.data() + n);
        GcodTerms terms = gcod_terms(tape, tape.constant(z), emb, labels, uv, state);
        tape.backward(terms.u_loss);
        u.grad = terms.u_batch->grad;
      };
      Parameter* params[] = {&u};
      detail::record_case(c, gradcheck(loss, analytic, params, opt.step, opt.floor));
    }
    cases.push_back(c);
  }

  for (LayerKind kind : {LayerKind::GIN, LayerKind::GCN}) {
    GradcheckCase c{"model[" + to_string(kind) + "]+cross_entropy"};
    for (int t = 0; t < opt.instances; ++t) {
      const auto b = detail::random_batch(rng, 3);
      ModelConfig mc;
      mc.kind = kind;
      mc.input_dim = 3;
      mc.hidden = hidden;
      mc.layers = 2;
      mc.num_classes = classes;
      mc.train_epsilon = kind == LayerKind::GIN;
      Model model(mc, rng.next());
      const BatchInput batch = prepare_batch(b.block, mc);
      const auto labels = random_labels(b.block.num_components());
      check(c,
            [&](Tape& tape) { return cross_entropy(tape, model.forward(tape, batch).logits, labels); },
            model.parameters());
    }
    cases.push_back(c);
  }
  return cases;
}

}  // namespace gcr
