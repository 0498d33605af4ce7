#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gcrobust/errors.hpp"
#include "gcrobust/linalg.hpp"
#include "gcrobust/rng.hpp"

namespace gcr {

enum class NoiseKind { Symmetric, PairFlip };

inline std::string to_string(NoiseKind k) { return k == NoiseKind::Symmetric ? "symmetric" : "pairflip"; }

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Symmetric;
  double rate = 0.0;
  std::uint64_t seed = 0;
};

struct NoisyLabels {
  std::vector<int> assigned;
  std::vector<bool> noise_mask;

  double realized_rate() const {
    if (noise_mask.empty()) return 0.0;
    std::size_t k = 0;
    for (bool b : noise_mask) k += b ? 1 : 0;
    return static_cast<double>(k) / static_cast<double>(noise_mask.size());
  }
};

/// Independent per-sample corruption. Symmetric noise replaces a label, with
/// probability `rate`, by a uniformly drawn *different* class; pair-flip
/// noise maps c to (c + 1) mod C. Every sample consumes the same number of
/// draws regardless of outcome, so sample i's fate depends only on
/// (seed, i).
inline NoisyLabels inject(std::span<const int> labels, int num_classes, const NoiseSpec& spec) {
  if (!(spec.rate >= 0.0 && spec.rate <= 1.0)) throw ConfigError("noise rate must lie in [0, 1]");
  if (num_classes < 2 && spec.rate > 0.0) throw ConfigError("label noise needs at least two classes");
  NoisyLabels out;
  out.assigned.assign(labels.begin(), labels.end());
  out.noise_mask.assign(labels.size(), false);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels[i];
    if (c < 0 || c >= num_classes) throw DataError("inject: label " + std::to_string(c) + " out of range");
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    const bool flip = rng.uniform() < spec.rate;
    const int offset = num_classes > 1 ? 1 + rng.below(num_classes - 1) : 0;
    if (!flip) continue;
    out.assigned[i] = spec.kind == NoiseKind::Symmetric ? (c + offset) % num_classes : (c + 1) % num_classes;
    out.noise_mask[i] = true;
  }
  return out;
}

/// Empirical P(assigned = j | true = i). Rows without samples are identity
/// rows.
inline Matrix confusion_estimate(std::span<const int> truth, std::span<const int> assigned, int num_classes) {
  if (truth.size() != assigned.size()) throw DimensionError("confusion_estimate: length mismatch");
  Matrix counts = Matrix::Zero(num_classes, num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) counts(truth[i], assigned[i]) += 1.0;
  for (int r = 0; r < num_classes; ++r) {
    const double total = counts.row(r).sum();
    if (total == 0.0) {
      counts.row(r).setZero();
      counts(r, r) = 1.0;
    } else {
      counts.row(r) /= total;
    }
  }
  return counts;
}

}  // namespace gcr
