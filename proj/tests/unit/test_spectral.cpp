#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <numbers>

#include "gcrobust/selftest.hpp"
#include "gcrobust/spectral.hpp"

using namespace gcr;

TEST(SymEig, SwapMatrix) {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  const auto e = sym_eig(m);
  EXPECT_NEAR(e.eigenvalues(0), -1.0, 1e-14);
  EXPECT_NEAR(e.eigenvalues(1), 1.0, 1e-14);
}

TEST(SymEig, PathAndTriangleSpectra) {
  const auto p2 = laplacian_spectrum(Graph(Matrix::Ones(2, 1), {{0, 1}}, 0));
  EXPECT_NEAR(p2.eigenvalues(0), 0.0, 1e-14);
  EXPECT_NEAR(p2.eigenvalues(1), 2.0, 1e-14);
  const auto tri = laplacian_spectrum(Graph(Matrix::Ones(3, 1), {{0, 1}, {1, 2}, {0, 2}}, 0));
  EXPECT_NEAR(tri.eigenvalues(0), 0.0, 1e-14);
  EXPECT_NEAR(tri.eigenvalues(1), 1.5, 1e-14);
  EXPECT_NEAR(tri.eigenvalues(2), 1.5, 1e-14);
}

TEST(SymEig, CycleSpectrumClosedForm) {
  // Normalized Laplacian of C_n has eigenvalues 1 − cos(2πk/n).
  const int n = 9;
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
  const auto e = laplacian_spectrum(Graph(Matrix::Ones(n, 1), edges, 0));
  std::vector<double> expected;
  for (int k = 0; k < n; ++k) expected.push_back(1.0 - std::cos(2.0 * std::numbers::pi * k / n));
  std::sort(expected.begin(), expected.end());
  for (int k = 0; k < n; ++k) EXPECT_NEAR(e.eigenvalues(k), expected[static_cast<std::size_t>(k)], 1e-12);
}

TEST(SymEig, AgreesWithReferenceSolverOnRandomMatrices) {
  Rng rng(3);
  for (int n : {1, 2, 5, 17, 40, 64}) {
    Matrix a = random_matrix(rng, n, n);
    a = (a + a.transpose()).eval();
    const auto mine = sym_eig(a);
    Eigen::SelfAdjointEigenSolver<Matrix> ref(a);
    EXPECT_LT((mine.eigenvalues - ref.eigenvalues()).cwiseAbs().maxCoeff(), 1e-10) << n;
    EXPECT_LT((mine.reconstruct() - a).norm() / a.norm(), 1e-10);
    EXPECT_LT((mine.eigenvectors.transpose() * mine.eigenvectors - Matrix::Identity(n, n)).norm(), 1e-10);
    for (int k = 1; k < n; ++k) EXPECT_LE(mine.eigenvalues(k - 1), mine.eigenvalues(k));
  }
}

TEST(SymEig, Deterministic) {
  Rng rng(5);
  Matrix a = random_matrix(rng, 12, 12);
  a = (a + a.transpose()).eval();
  const auto x = sym_eig(a);
  const auto y = sym_eig(a);
  EXPECT_EQ(x.eigenvalues, y.eigenvalues);
  EXPECT_EQ(x.eigenvectors, y.eigenvectors);
}

TEST(SymEig, RejectsBadInput) {
  EXPECT_THROW(sym_eig(Matrix::Zero(2, 3)), DimensionError);
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_ANY_THROW(sym_eig(m));
}

TEST(SymEig, LaplacianSpectraInRange) {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const Graph g = random_graph(rng, 2, 15, 1, rng.uniform(0.1, 0.9));
    const auto e = laplacian_spectrum(g);
    EXPECT_GE(e.eigenvalues(0), -1e-10);
    EXPECT_NEAR(e.eigenvalues(0), 0.0, 1e-10);
    EXPECT_LE(e.eigenvalues(e.eigenvalues.size() - 1), 2.0 + 1e-10);
  }
}
