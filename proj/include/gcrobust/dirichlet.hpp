#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "gcrobust/graph.hpp"
#include "gcrobust/spectral.hpp"

namespace gcr {

/// Dirichlet energy of node representations Z on graph g, trace(Zᵀ Δ Z) with
/// the normalized Laplacian. Evaluated edge by edge:
///   Σ_{(i,j)∈E} || Z_i / sqrt(d_i) − Z_j / sqrt(d_j) ||²
/// which is the same quadratic form (isolated nodes contribute nothing).
inline double energy_spatial(const Matrix& z, int num_nodes, std::span<const Edge> edges) {
  if (z.rows() != num_nodes) {
    throw DimensionError("energy_spatial: representation has " + std::to_string(z.rows()) + " rows for " +
                         std::to_string(num_nodes) + " nodes");
  }
  const auto deg = detail::degrees_of(num_nodes, edges);
  double total = 0.0;
  for (const auto& e : edges) {
    const double su = 1.0 / std::sqrt(static_cast<double>(deg[static_cast<std::size_t>(e.u)]));
    const double sv = 1.0 / std::sqrt(static_cast<double>(deg[static_cast<std::size_t>(e.v)]));
    total += (z.row(e.u) * su - z.row(e.v) * sv).squaredNorm();
  }
  return total;
}

inline double energy_spatial(const Matrix& z, const Graph& g) { return energy_spatial(z, g.num_nodes(), g.edges()); }
inline double energy_spatial(const Matrix& z, const BlockGraph& b) { return energy_spatial(z, b.num_nodes(), b.edges); }

/// Dense trace(Zᵀ L Z) for an explicit Laplacian.
inline double energy_trace(const Matrix& z, const Matrix& laplacian) {
  if (laplacian.rows() != z.rows() || laplacian.cols() != z.rows()) throw DimensionError("energy_trace: shape mismatch");
  return (z.transpose() * laplacian * z).trace();
}

/// Spectral form Σ_r Σ_u λ_u (ψ_uᵀ Z_r)².
inline double energy_spectral(const Matrix& z, const EigenDecomposition& spec) {
  if (spec.eigenvectors.rows() != z.rows()) throw DimensionError("energy_spectral: basis does not match representation rows");
  const Matrix coeffs = spec.eigenvectors.transpose() * z;  // row u holds ψ_uᵀ Z
  double total = 0.0;
  for (Eigen::Index u = 0; u < coeffs.rows(); ++u) total += spec.eigenvalues(u) * coeffs.row(u).squaredNorm();
  return total;
}

enum class EnergyMethod { Spatial, Spectral };

struct EnergyReport {
  std::vector<double> per_graph_energy;
  double dataset_energy = 0.0;
  EnergyMethod method = EnergyMethod::Spatial;
};

/// A representation matrix paired with the graph it lives on.
struct Representation {
  const Matrix* z;
  const Graph* graph;
};

inline EnergyReport dataset_energy(std::span<const Representation> reps, EnergyMethod method = EnergyMethod::Spatial) {
  if (reps.empty()) throw EmptyDatasetError("dataset_energy: empty dataset");
  EnergyReport report;
  report.method = method;
  report.per_graph_energy.reserve(reps.size());
  double sum = 0.0;
  for (const auto& r : reps) {
    const double e = method == EnergyMethod::Spatial ? energy_spatial(*r.z, *r.graph)
                                                     : energy_spectral(*r.z, laplacian_spectrum(*r.graph));
    report.per_graph_energy.push_back(e);
    sum += e;
  }
  report.dataset_energy = sum / static_cast<double>(reps.size());
  return report;
}

/// Checks that the dataset-average energy equals the energy of the single
/// block-diagonal graph divided by |D|. The block side goes through the
/// assembled dense Laplacian so the two routes share no code past Δ's
/// entries. Returns |E(D) − E(block)/|D|| / max(1, E(D)).
inline double block_identity_residual(std::span<const Representation> reps) {
  const EnergyReport avg = dataset_energy(reps);
  std::vector<Graph> members;
  members.reserve(reps.size());
  for (const auto& r : reps) members.push_back(r.graph->with_features(*r.z));
  const BlockGraph block = block_diagonal(members);
  const double whole = energy_trace(block.features, normalized_laplacian(block)) / static_cast<double>(reps.size());
  return std::abs(avg.dataset_energy - whole) / std::max(1.0, avg.dataset_energy);
}

}  // namespace gcr
