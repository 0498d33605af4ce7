#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "gcrobust/model.hpp"
#include "gcrobust/spectral.hpp"

namespace gcr {

/// Nearest symmetric PSD matrix: symmetrize S = (W + Wᵀ)/2, decompose
/// S = Φ μ Φᵀ, clamp μ at zero and rebuild Φ [μ]⁺ Φᵀ. The result is
/// symmetrized once more so it is exactly symmetric in floating point.
inline Matrix project_positive(const Matrix& w) {
  require_square(w, "project_positive");
  const Matrix sym = 0.5 * (w + w.transpose());
  const EigenDecomposition eig = sym_eig(sym);
  const Vector kept = eig.eigenvalues.cwiseMax(0.0);
  const Matrix rebuilt = eig.eigenvectors * kept.asDiagonal() * eig.eigenvectors.transpose();
  return 0.5 * (rebuilt + rebuilt.transpose());
}

enum class ProjectionTarget { None, W2Only, W1AndW2 };

inline std::string to_string(ProjectionTarget t) {
  switch (t) {
    case ProjectionTarget::None: return "none";
    case ProjectionTarget::W2Only: return "w2_only";
    case ProjectionTarget::W1AndW2: return "w1_and_w2";
  }
  return "?";
}

struct ProjectionPolicy {
  ProjectionTarget target = ProjectionTarget::None;
  std::vector<int> layers;  // empty means every layer
  int frequency = 1;        // apply every k optimizer steps

  bool covers_layer(int l) const {
    return layers.empty() || std::find(layers.begin(), layers.end(), l) != layers.end();
  }

  bool due(std::uint64_t optimizer_step) const {
    if (frequency < 1) throw ConfigError("projection frequency must be >= 1");
    return target != ProjectionTarget::None && optimizer_step % static_cast<std::uint64_t>(frequency) == 0;
  }

  friend bool operator==(const ProjectionPolicy&, const ProjectionPolicy&) = default;
};

/// Replaces each targeted weight matrix by its positive projection. Runs
/// outside any tape and leaves gradients alone. Returns the number of
/// matrices replaced.
inline int apply_policy(Model& model, const ProjectionPolicy& policy) {
  if (policy.frequency < 1) throw ConfigError("projection frequency must be >= 1");
  if (policy.target == ProjectionTarget::None) return 0;
  int replaced = 0;
  auto& layers = model.layers();
  for (int l = 0; l < static_cast<int>(layers.size()); ++l) {
    if (!policy.covers_layer(l)) continue;
    auto& layer = layers[static_cast<std::size_t>(l)];
    if (policy.target == ProjectionTarget::W1AndW2) {
      layer.w1.value = project_positive(layer.w1.value);
      ++replaced;
    }
    layer.w2.value = project_positive(layer.w2.value);
    ++replaced;
  }
  return replaced;
}

/// Smallest eigenvalue over the targeted matrices (symmetric part); +inf
/// when nothing is targeted.
inline double min_targeted_eigenvalue(const Model& model, const ProjectionPolicy& policy) {
  double lo = std::numeric_limits<double>::infinity();
  if (policy.target == ProjectionTarget::None) return lo;
  const auto& layers = model.layers();
  for (int l = 0; l < static_cast<int>(layers.size()); ++l) {
    if (!policy.covers_layer(l)) continue;
    const auto& layer = layers[static_cast<std::size_t>(l)];
    const Matrix& w2 = layer.w2.value;
    lo = std::min(lo, min_eigenvalue(0.5 * (w2 + w2.transpose())));
    if (policy.target == ProjectionTarget::W1AndW2) {
      const Matrix& w1 = layer.w1.value;
      lo = std::min(lo, min_eigenvalue(0.5 * (w1 + w1.transpose())));
    }
  }
  return lo;
}

}  // namespace gcr
