#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gcrobust/adam.hpp"
#include "gcrobust/autodiff.hpp"
#include "gcrobust/model.hpp"

namespace gcr {

namespace detail {

inline Matrix log_softmax_rows(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double mx = z.row(i).maxCoeff();
    const double lse = mx + std::log((z.row(i).array() - mx).exp().sum());
    out.row(i) = z.row(i).array() - lse;
  }
  return out;
}

// log σ(x) without overflow.
inline double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double xlogy(double x, double logy) { return x == 0.0 ? 0.0 : x * logy; }

inline Matrix one_hot(std::span<const int> labels, int num_classes) {
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw DimensionError("label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(num_classes) + ")");
    }
    y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return y;
}

}  // namespace detail

/// mean_i  −Σ_c targets(i,c) · log softmax(logits_i + offset_i)_c
///
/// `offset` is a constant shift of the logits (may be empty for none).
inline Var softmax_cross_entropy(Tape& tape, Var logits, Matrix targets, Matrix offset = {}) {
  const Matrix& z = tape.value(logits);
  if (targets.rows() != z.rows() || targets.cols() != z.cols()) throw DimensionError("cross entropy: target shape mismatch");
  if (offset.size() != 0 && (offset.rows() != z.rows() || offset.cols() != z.cols())) {
    throw DimensionError("cross entropy: offset shape mismatch");
  }
  const Matrix shifted = offset.size() == 0 ? z : Matrix(z + offset);
  const Matrix logp = detail::log_softmax_rows(shifted);
  const double batch = static_cast<double>(z.rows());
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index c = 0; c < z.cols(); ++c) total -= detail::xlogy(targets(i, c), logp(i, c));
  Matrix out(1, 1);
  out(0, 0) = total / batch;
  return tape.record(std::move(out), "softmax_cross_entropy",
                     [logits, logp, targets = std::move(targets), batch](Tape& t, const Matrix& g) {
                       const Matrix p = logp.array().exp().matrix();
                       const Vector mass = targets.rowwise().sum();
                       Matrix dz = p.array().colwise() * mass.array();
                       dz -= targets;
                       t.accumulate(logits, (g(0, 0) / batch) * dz);
                     });
}

/// Mean cross-entropy of logits against integer labels.
inline Var cross_entropy(Tape& tape, Var logits, std::span<const int> labels) {
  const auto classes = static_cast<int>(tape.value(logits).cols());
  if (static_cast<Eigen::Index>(labels.size()) != tape.value(logits).rows()) {
    throw DimensionError("cross entropy: label count does not match batch");
  }
  return softmax_cross_entropy(tape, logits, detail::one_hot(labels, classes));
}

/// Configuration of the GCOD objective. With w_ce = 1, w_kl = 0,
/// soft_targets = false and u = 0, the model objective is plain
/// cross-entropy on the assigned labels.
struct GcodConfig {
  double w_ce = 1.0;   // weight of L1
  double w_u = 1.0;    // weight of L2 (the u objective)
  double w_kl = 1.0;   // weight of L3
  bool soft_targets = true;
  bool accuracy_scaling = true;
  double u_lr = 1.0;

  friend bool operator==(const GcodConfig&, const GcodConfig&) = default;
};

/// Per-sample discount weights u (one per training graph, in training-split
/// order), the per-class embedding centroids and the training accuracy of
/// the previous epoch.
struct GcodState {
  GcodConfig config;
  std::vector<double> u;
  Matrix class_stats;
  std::vector<bool> class_empty;
  bool stats_ready = false;
  double train_accuracy = 0.0;

  GcodState() = default;
  GcodState(std::size_t train_size, int num_classes, int embedding_dim, GcodConfig cfg = {})
      : config(cfg),
        u(train_size, 0.0),
        class_stats(Matrix::Zero(num_classes, embedding_dim)),
        class_empty(static_cast<std::size_t>(num_classes), true) {}

  int num_classes() const { return static_cast<int>(class_stats.rows()); }
};

/// class_stats[c] = mean embedding of training samples whose assigned label
/// is c; classes without samples keep a zero row and are flagged empty.
inline void refresh_class_stats(GcodState& state, const Matrix& embeddings, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != embeddings.rows()) throw DimensionError("refresh_class_stats: size mismatch");
  const int classes = state.num_classes();
  Matrix sums = Matrix::Zero(classes, embeddings.cols());
  std::vector<int> counts(static_cast<std::size_t>(classes), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    sums.row(labels[i]) += embeddings.row(static_cast<Eigen::Index>(i));
    ++counts[static_cast<std::size_t>(labels[i])];
  }
  state.class_stats = Matrix::Zero(classes, embeddings.cols());
  for (int c = 0; c < classes; ++c) {
    const bool empty = counts[static_cast<std::size_t>(c)] == 0;
    state.class_empty[static_cast<std::size_t>(c)] = empty;
    if (!empty) state.class_stats.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
  }
  state.stats_ready = true;
}

/// ỹ_i = max(0, cos(h_i, centroid[y_i])) · onehot(y_i). Falls back to the
/// hard label before the first refresh, for empty classes and for zero
/// vectors.
inline Matrix gcod_soft_targets(const Matrix& embeddings, std::span<const int> labels, const GcodState& state) {
  Matrix targets = detail::one_hot(labels, state.num_classes());
  if (!state.config.soft_targets || !state.stats_ready) return targets;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels[i];
    if (state.class_empty[static_cast<std::size_t>(c)]) continue;
    const auto h = embeddings.row(static_cast<Eigen::Index>(i));
    const auto centroid = state.class_stats.row(c);
    const double denom = h.norm() * centroid.norm();
    if (denom == 0.0) continue;
    targets(static_cast<Eigen::Index>(i), c) = std::max(0.0, h.dot(centroid) / denom);
  }
  return targets;
}

struct GcodDiagnostics {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double accuracy_factor = 0.0;
  std::vector<double> per_sample_l1;
  std::vector<double> per_sample_l2;
  std::vector<double> per_sample_l3;
};

struct GcodTerms {
  Var model_loss;  // w_ce·L1 + w_kl·L3, differentiable in the model only
  Var u_loss;      // w_u·L2, differentiable in u only
  std::unique_ptr<Parameter> u_batch;  // leaf carrying the batch's u values
  GcodDiagnostics diagnostics;
};

/// The GCOD objective on one batch.
///
/// With logits z, one-hot assigned labels y, soft targets ỹ, predicted
/// one-hot ŷ = onehot(argmax z), training accuracy a and batch weights u:
///   L1 = mean_i CE(z_i + a·u_i·y_i, ỹ_i)
///   L2 = mean_i (1/C) || ŷ_i + u_i·y_i − y_i ||²
///   L3 = (1 − a) · mean_i KL( Bern(σ(−log u_i)) || Bern(σ(z_i·y_i)) )
/// σ(−log u) = 1/(1 + u), so L3 stays finite at u = 0. u is a constant
/// inside L1 and L3; z and ŷ are constants inside L2.
inline GcodTerms gcod_terms(Tape& tape, Var logits, const Matrix& embeddings, std::span<const int> labels,
                            std::span<const double> u_batch, const GcodState& state) {
  const Matrix& z = tape.value(logits);
  const Eigen::Index batch = z.rows();
  const int classes = static_cast<int>(z.cols());
  if (static_cast<Eigen::Index>(labels.size()) != batch || static_cast<Eigen::Index>(u_batch.size()) != batch ||
      embeddings.rows() != batch) {
    throw DimensionError("gcod_terms: batch sizes disagree");
  }
  if (classes != state.num_classes()) throw DimensionError("gcod_terms: class count mismatch");
  const GcodConfig& cfg = state.config;
  const double acc = cfg.accuracy_scaling ? state.train_accuracy : 1.0;
  const double kl_scale = cfg.accuracy_scaling ? 1.0 - state.train_accuracy : 1.0;
  const double nb = static_cast<double>(batch);

  const Matrix y = detail::one_hot(labels, classes);
  Vector u(batch);
  for (Eigen::Index i = 0; i < batch; ++i) u(i) = u_batch[static_cast<std::size_t>(i)];

  GcodTerms out;
  out.diagnostics.accuracy_factor = acc;

  // L1: soft-target cross entropy with the label logit lifted by a·u.
  Matrix offset = y;
  for (Eigen::Index i = 0; i < batch; ++i) offset.row(i) *= acc * u(i);
  Matrix targets = gcod_soft_targets(embeddings, labels, state);
  {
    const Matrix logp = detail::log_softmax_rows(z + offset);
    for (Eigen::Index i = 0; i < batch; ++i) {
      double li = 0.0;
      for (int c = 0; c < classes; ++c) li -= detail::xlogy(targets(i, c), logp(i, c));
      out.diagnostics.per_sample_l1.push_back(li);
    }
  }
  Var l1 = softmax_cross_entropy(tape, logits, std::move(targets), std::move(offset));

  // L3: Bernoulli KL between 1/(1+u) and σ(label logit).
  Vector q(batch);
  for (Eigen::Index i = 0; i < batch; ++i) q(i) = 1.0 / (1.0 + u(i));
  double l3_sum = 0.0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    const double zy = z(i, labels[static_cast<std::size_t>(i)]);
    const double kl = detail::xlogy(q(i), std::log(q(i))) - q(i) * detail::log_sigmoid(zy) +
                      detail::xlogy(1.0 - q(i), std::log(1.0 - q(i))) - (1.0 - q(i)) * detail::log_sigmoid(-zy);
    out.diagnostics.per_sample_l3.push_back(kl_scale * kl);
    l3_sum += kl;
  }
  Matrix l3_value(1, 1);
  l3_value(0, 0) = kl_scale * l3_sum / nb;
  std::vector<int> label_copy(labels.begin(), labels.end());
  Var l3 = tape.record(std::move(l3_value), "gcod_l3",
                       [logits, q, kl_scale, nb, label_copy = std::move(label_copy)](Tape& t, const Matrix& g) {
                         const Matrix& zz = t.value(logits);
                         Matrix dz = Matrix::Zero(zz.rows(), zz.cols());
                         for (Eigen::Index i = 0; i < zz.rows(); ++i) {
                           const int c = label_copy[static_cast<std::size_t>(i)];
                           dz(i, c) = kl_scale * (detail::sigmoid(zz(i, c)) - q(i)) / nb;
                         }
                         t.accumulate(logits, g(0, 0) * dz);
                       });

  // L2 on a u leaf; predictions are constants here.
  Matrix pred = Matrix::Zero(batch, classes);
  for (Eigen::Index i = 0; i < batch; ++i) {
    Eigen::Index arg = 0;
    z.row(i).maxCoeff(&arg);
    pred(i, arg) = 1.0;
  }
  out.u_batch = std::make_unique<Parameter>("gcod.u", Matrix(u));
  Var u_var = tape.param(*out.u_batch);
  double l2_sum = 0.0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    const double li = (pred.row(i) + u(i) * y.row(i) - y.row(i)).squaredNorm() / classes;
    out.diagnostics.per_sample_l2.push_back(li);
    l2_sum += li;
  }
  Matrix l2_value(1, 1);
  l2_value(0, 0) = l2_sum / nb;
  Var l2 = tape.record(std::move(l2_value), "gcod_l2", [u_var, pred, y, classes, nb](Tape& t, const Matrix& g) {
    const Matrix& uu = t.value(u_var);
    Matrix du(uu.rows(), 1);
    for (Eigen::Index i = 0; i < uu.rows(); ++i) {
      const double residual = (pred.row(i) + uu(i, 0) * y.row(i) - y.row(i)).dot(y.row(i));
      du(i, 0) = 2.0 * residual / (classes * nb);
    }
    t.accumulate(u_var, g(0, 0) * du);
  });

  out.diagnostics.l1 = tape.value(l1)(0, 0);
  out.diagnostics.l2 = tape.value(l2)(0, 0);
  out.diagnostics.l3 = tape.value(l3)(0, 0);
  out.model_loss = tape.lincomb(l1, cfg.w_ce, l3, cfg.w_kl);
  out.u_loss = tape.scale(l2, cfg.w_u);
  return out;
}

struct GcodStepResult {
  double model_loss = 0.0;
  GcodDiagnostics diagnostics;
  std::vector<int> predictions;
};

/// One alternating GCOD update on a batch: forward, backprop the model
/// objective and take an Adam step, then backprop the u objective and take
/// a plain gradient step on the batch's u entries, clamped to [0, 1].
/// `slots` index into state.u; repeated slots accumulate their gradient.
inline GcodStepResult gcod_step(Model& model, AdamState& adam, GcodState& state, const BatchInput& batch,
                                std::span<const int> slots, std::span<const int> labels) {
  if (slots.size() != labels.size() || static_cast<int>(slots.size()) != batch.block.num_components()) {
    throw DimensionError("gcod_step: slots/labels do not match batch");
  }
  std::vector<double> u_batch;
  u_batch.reserve(slots.size());
  for (int s : slots) u_batch.push_back(state.u.at(static_cast<std::size_t>(s)));

  Tape tape;
  const ForwardResult fwd = model.forward(tape, batch);
  GcodTerms terms = gcod_terms(tape, fwd.logits, tape.value(fwd.graph_embeddings), labels, u_batch, state);

  auto params = model.parameters();
  for (Parameter* p : params) p->zero_grad();
  tape.backward(terms.model_loss);
  adam_step(adam, params);
  for (Parameter* p : params) p->zero_grad();

  tape.backward(terms.u_loss);
  std::vector<double> du(state.u.size(), 0.0);
  std::vector<char> touched(state.u.size(), 0);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto s = static_cast<std::size_t>(slots[i]);
    du[s] += terms.u_batch->grad(static_cast<Eigen::Index>(i), 0);
    touched[s] = 1;
  }
  for (std::size_t s = 0; s < state.u.size(); ++s) {
    if (!touched[s]) continue;
    state.u[s] = std::clamp(state.u[s] - state.config.u_lr * du[s], 0.0, 1.0);
  }

  GcodStepResult result;
  result.model_loss = tape.value(terms.model_loss)(0, 0);
  result.diagnostics = std::move(terms.diagnostics);
  const Matrix& z = tape.value(fwd.logits);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index arg = 0;
    z.row(i).maxCoeff(&arg);
    result.predictions.push_back(static_cast<int>(arg));
  }
  return result;
}

}  // namespace gcr
