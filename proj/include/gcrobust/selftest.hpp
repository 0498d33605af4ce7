#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gcrobust/dirichlet.hpp"
#include "gcrobust/psd_projection.hpp"
#include "gcrobust/rng.hpp"
#include "gcrobust/spectral.hpp"

namespace gcr {

struct SelftestResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;  // largest observed error
  double tolerance = 0.0;
};

/// Random simple graph with at least one edge.
inline Graph random_graph(Rng& rng, int min_nodes, int max_nodes, int feature_dim, double p = 0.5) {
  const int n = min_nodes + rng.below(max_nodes - min_nodes + 1);
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.bernoulli(p)) edges.push_back({u, v});
  if (edges.empty()) edges.push_back({0, 1});
  Matrix x(n, feature_dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
  return Graph(std::move(x), std::move(edges), 0);
}

inline Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

inline SelftestResult selftest_block_identity(std::uint64_t seed, int instances = 50) {
  SelftestResult res{"block-diagonal energy identity", true, 0.0, 1e-10};
  Rng rng(seed);
  for (int t = 0; t < instances; ++t) {
    const int count = 2 + rng.below(5);
    const int dim = 1 + rng.below(4);
    std::vector<Graph> graphs;
    std::vector<Matrix> zs;
    for (int g = 0; g < count; ++g) {
      graphs.push_back(random_graph(rng, 2, 8, dim));
      zs.push_back(random_matrix(rng, graphs.back().num_nodes(), dim));
    }
    std::vector<Representation> reps;
    for (int g = 0; g < count; ++g) reps.push_back({&zs[g], &graphs[g]});
    res.worst = std::max(res.worst, block_identity_residual(reps));
  }
  res.passed = res.worst < res.tolerance;
  return res;
}

inline SelftestResult selftest_energy_forms(std::uint64_t seed, int instances = 100) {
  SelftestResult res{"spatial vs spectral energy", true, 0.0, 1e-8};
  Rng rng(seed);
  for (int t = 0; t < instances; ++t) {
    const Graph g = random_graph(rng, 2, 12, 1);
    const Matrix z = random_matrix(rng, g.num_nodes(), 1 + rng.below(4));
    const double a = energy_spatial(z, g);
    const double b = energy_spectral(z, laplacian_spectrum(g));
    res.worst = std::max(res.worst, std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}));
  }
  res.passed = res.worst < res.tolerance;
  return res;
}

inline SelftestResult selftest_eigensolver(std::uint64_t seed, int instances = 20) {
  SelftestResult res{"jacobi reconstruction/orthonormality", true, 0.0, 1e-10};
  Rng rng(seed);
  for (int t = 0; t < instances; ++t) {
    const int n = 1 + rng.below(64);
    Matrix a = random_matrix(rng, n, n);
    a = (a + a.transpose()).eval();
    const EigenDecomposition e = sym_eig(a);
    const double recon = (e.reconstruct() - a).norm() / std::max(a.norm(), 1e-300);
    const double ortho = (e.eigenvectors.transpose() * e.eigenvectors - Matrix::Identity(n, n)).norm();
    res.worst = std::max({res.worst, recon, ortho});
  }
  res.passed = res.worst < res.tolerance;
  return res;
}

inline SelftestResult selftest_projection(std::uint64_t seed, int instances = 20) {
  SelftestResult res{"psd projection", true, 0.0, 1e-10};
  Rng rng(seed);
  for (int t = 0; t < instances; ++t) {
    const int n = 1 + rng.below(32);
    const Matrix w = random_matrix(rng, n, n);
    const Matrix p = project_positive(w);
    const double neg = std::max(0.0, -min_eigenvalue(p));
    const double idem = (project_positive(p) - p).norm();
    res.worst = std::max({res.worst, neg, idem});
  }
  res.passed = res.worst < res.tolerance;
  return res;
}

inline std::vector<SelftestResult> run_selftests(std::uint64_t seed = 7) {
  return {selftest_block_identity(derive_seed(seed, "block_identity")), selftest_energy_forms(derive_seed(seed, "energy")),
          selftest_eigensolver(derive_seed(seed, "eig")), selftest_projection(derive_seed(seed, "psd"))};
}

}  // namespace gcr
