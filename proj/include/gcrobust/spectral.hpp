#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gcrobust/graph.hpp"
#include "gcrobust/linalg.hpp"

namespace gcr {

/// Eigenvalues ascending; eigenvectors are the matching orthonormal columns.
struct EigenDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;

  Matrix reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  }
};

struct JacobiOptions {
  double relative_tolerance = 1e-12;
  int max_sweeps = 100;
};

/// Cyclic Jacobi eigensolver for dense symmetric matrices.
///
/// Rotations visit (p, q) pairs in row-major order p < q on every sweep, and
/// the loop stops once the off-diagonal Frobenius norm drops below
/// `relative_tolerance * ||M||_F`. Output ordering is ascending with ties
/// broken by original column index, so results are reproducible bit for bit.
/// Only the upper triangle symmetry is assumed; callers symmetrize first.
inline EigenDecomposition sym_eig(const Matrix& m, JacobiOptions opts = {}) {
  require_square(m, "sym_eig");
  if (!m.allFinite()) throw NumericalError("sym_eig: non-finite entry in input");
  const Eigen::Index n = m.rows();
  Matrix a = m;
  Matrix v = Matrix::Identity(n, n);

  const double scale = a.norm();
  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  if (scale > 0.0) {
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
      if (off_norm() <= opts.relative_tolerance * scale) break;
      for (Eigen::Index p = 0; p < n - 1; ++p) {
        for (Eigen::Index q = p + 1; q < n; ++q) {
          const double apq = a(p, q);
          if (apq == 0.0) continue;
          const double app = a(p, p);
          const double aqq = a(q, q);
          // t = tan(theta) chosen as the smaller root for stability.
          const double theta = (aqq - app) / (2.0 * apq);
          const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          const double c = 1.0 / std::sqrt(t * t + 1.0);
          const double s = t * c;

          // A <- J^T A J acting on rows/columns p and q.
          for (Eigen::Index k = 0; k < n; ++k) {
            const double akp = a(k, p);
            const double akq = a(k, q);
            a(k, p) = c * akp - s * akq;
            a(k, q) = s * akp + c * akq;
          }
          for (Eigen::Index k = 0; k < n; ++k) {
            const double apk = a(p, k);
            const double aqk = a(q, k);
            a(p, k) = c * apk - s * aqk;
            a(q, k) = s * apk + c * aqk;
          }
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          for (Eigen::Index k = 0; k < n; ++k) {
            const double vkp = v(k, p);
            const double vkq = v(k, q);
            v(k, p) = c * vkp - s * vkq;
            v(k, q) = s * vkp + c * vkq;
          }
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

  EigenDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = a(src, src);
    out.eigenvectors.col(k) = v.col(src);
  }
  return out;
}

inline EigenDecomposition laplacian_spectrum(const Graph& g) { return sym_eig(normalized_laplacian(g)); }

inline double min_eigenvalue(const Matrix& symmetric) { return sym_eig(symmetric).eigenvalues(0); }

}  // namespace gcr
