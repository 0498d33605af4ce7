#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "gcrobust/autodiff.hpp"

namespace gcr {

/// Adam with decoupled weight decay. Moment buffers are created on the
/// first step and keyed by position in the parameter list.
struct AdamState {
  double lr = 0.001;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

/// One update:
///   m ← β1 m + (1 − β1) g,  v ← β2 v + (1 − β2) g²
///   p ← p − lr · m̂ / (sqrt(v̂) + ε) − lr · wd · p
/// Gradients are read, not cleared.
inline void adam_step(AdamState& state, std::span<Parameter* const> params) {
  if (state.first_moment.empty()) {
    for (const Parameter* p : params) {
      state.first_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      state.second_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state.first_moment.size() != params.size()) throw DimensionError("adam_step: parameter count changed");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Parameter& p = *params[k];
    if (state.first_moment[k].rows() != p.value.rows() || state.first_moment[k].cols() != p.value.cols() ||
        p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
      throw DimensionError("adam_step: shape mismatch for " + p.name);
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(state.beta1, t);
  const double bias2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Matrix& m = state.first_moment[k];
    Matrix& v = state.second_moment[k];
    m = state.beta1 * m + (1.0 - state.beta1) * p.grad;
    v = state.beta2 * v + (1.0 - state.beta2) * p.grad.cwiseProduct(p.grad);
    const auto m_hat = m.array() / bias1;
    const auto v_hat = v.array() / bias2;
    const Matrix decay = state.lr * state.weight_decay * p.value;
    p.value.array() -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    p.value -= decay;
    require_finite(p.value, "adam_step(" + p.name + ")");
  }
}

}  // namespace gcr
