#pragma once

#include <cstddef>
#include <vector>

namespace biasprobe::instrumentation {

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  Matrix transposed() const;
};

struct PcaResult {
  Matrix components;   // k x F, unit rows, decreasing variance
  Matrix projections;  // N x k, centered data times components^T
  std::vector<double> mean;
  // Variance share of each of the F principal directions (the first k belong
  // to `components`); sums to 1 unless the data has no variance, in which
  // case every entry is 0 and the components are an arbitrary basis.
  std::vector<double> explained_ratio;
  bool degenerate = false;
};

// Symmetric eigendecomposition by cyclic Jacobi rotations. Eigenvalues are
// returned in decreasing order; eigenvectors are the columns of `vectors`.
void symmetric_eigen(const Matrix& a, std::vector<double>* values, Matrix* vectors);

// Mean-centred PCA. Uses the F x F covariance when F <= N, the N x N Gram
// matrix otherwise. Each component's largest-magnitude entry is positive.
PcaResult pca_top_k(const Matrix& data, std::size_t k);

}  // namespace biasprobe::instrumentation
