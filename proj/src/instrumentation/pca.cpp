#include "biasprobe/instrumentation/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "biasprobe/error.hpp"

namespace biasprobe::instrumentation {

Matrix Matrix::transposed() const {
  Matrix t(cols, rows);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) t(c, r) = (*this)(r, c);
  return t;
}

void symmetric_eigen(const Matrix& input, std::vector<double>* values, Matrix* vectors) {
  const std::size_t n = input.rows;
  if (input.cols != n) throw InstrumentationError("symmetric_eigen: matrix is not square");
  Matrix a = input;
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  double scale = 0.0;
  for (double x : a.values) scale = std::max(scale, std::abs(x));
  for (int sweep = 0; sweep < 100 && scale > 0.0; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * scale) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        // Rotation angle that annihilates a(p,q); the smaller root keeps it stable.
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
  values->assign(n, 0.0);
  *vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    (*values)[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) (*vectors)(r, k) = v(r, order[k]);
  }
}

namespace {

void normalize_sign(double* row, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(row[i]) > std::abs(row[best])) best = i;
  if (row[best] < 0)
    for (std::size_t i = 0; i < n; ++i) row[i] = -row[i];
}

}  // namespace

PcaResult pca_top_k(const Matrix& data, std::size_t k) {
  const std::size_t n = data.rows, f = data.cols;
  if (n < 2) throw InstrumentationError("pca_top_k: need at least 2 rows");
  if (k < 1 || k > f) throw InstrumentationError("pca_top_k: k must be in [1, " + std::to_string(f) + "]");

  PcaResult out;
  out.mean.assign(f, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < f; ++c) out.mean[c] += data(r, c);
  for (double& m : out.mean) m /= static_cast<double>(n);
  Matrix x(n, f);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < f; ++c) x(r, c) = data(r, c) - out.mean[c];

  std::vector<double> eigval;
  Matrix basis(f, f);  // columns are the principal directions
  if (f <= n) {
    Matrix cov(f, f);
    for (std::size_t i = 0; i < f; ++i)
      for (std::size_t j = i; j < f; ++j) {
        double s = 0.0;
        for (std::size_t r = 0; r < n; ++r) s += x(r, i) * x(r, j);
        cov(i, j) = cov(j, i) = s / static_cast<double>(n - 1);
      }
    symmetric_eigen(cov, &eigval, &basis);
  } else {
    // Wide data: eigenvectors of X X^T map to those of X^T X through X^T.
    Matrix gram(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < f; ++c) s += x(i, c) * x(j, c);
        gram(i, j) = gram(j, i) = s / static_cast<double>(n - 1);
      }
    Matrix u;
    std::vector<double> gval;
    symmetric_eigen(gram, &gval, &u);
    eigval.assign(f, 0.0);
    std::size_t filled = 0;
    for (std::size_t e = 0; e < n && filled < k; ++e) {
      if (gval[e] <= 1e-12 * std::max(gval[0], 1e-300)) break;
      std::vector<double> col(f, 0.0);
      for (std::size_t c = 0; c < f; ++c)
        for (std::size_t r = 0; r < n; ++r) col[c] += x(r, c) * u(r, e);
      double norm = 0.0;
      for (double v : col) norm += v * v;
      norm = std::sqrt(norm);
      for (std::size_t c = 0; c < f; ++c) basis(c, filled) = col[c] / norm;
      eigval[filled] = gval[e];
      ++filled;
    }
    for (std::size_t e = 0; e < n && e < f; ++e) eigval[e] = std::max(gval[e], 0.0);
    // Fill any directions left in the null space with an orthonormal completion.
    for (std::size_t col = filled; col < k; ++col) {
      for (std::size_t cand = 0; cand < f; ++cand) {
        std::vector<double> v(f, 0.0);
        v[cand] = 1.0;
        for (std::size_t prev = 0; prev < col; ++prev) {
          double d = 0.0;
          for (std::size_t c = 0; c < f; ++c) d += v[c] * basis(c, prev);
          for (std::size_t c = 0; c < f; ++c) v[c] -= d * basis(c, prev);
        }
        double norm = 0.0;
        for (double e : v) norm += e * e;
        if (norm > 1e-6) {
          norm = std::sqrt(norm);
          for (std::size_t c = 0; c < f; ++c) basis(c, col) = v[c] / norm;
          break;
        }
      }
    }
  }

  for (double& e : eigval) e = std::max(e, 0.0);
  const double total = std::accumulate(eigval.begin(), eigval.end(), 0.0);
  out.degenerate = !(total > 0.0);
  out.explained_ratio.assign(f, 0.0);
  if (!out.degenerate)
    for (std::size_t i = 0; i < f; ++i) out.explained_ratio[i] = eigval[i] / total;

  out.components = Matrix(k, f);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t c = 0; c < f; ++c) out.components(i, c) = basis(c, i);
    normalize_sign(&out.components.values[i * f], f);
  }
  out.projections = Matrix(n, k);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < k; ++i) {
      double s = 0.0;
      for (std::size_t c = 0; c < f; ++c) s += x(r, c) * out.components(i, c);
      out.projections(r, i) = s;
    }
  return out;
}

}  // namespace biasprobe::instrumentation
