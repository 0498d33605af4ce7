#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <string>

#include "gcrobust/errors.hpp"

namespace gcr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(what) + ": expected a square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

inline void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw NumericalError(what + ": non-finite value");
}

inline double relative_frobenius_error(const Matrix& a, const Matrix& b) {
  const double denom = std::max(1.0, b.norm());
  return (a - b).norm() / denom;
}

}  // namespace gcr
