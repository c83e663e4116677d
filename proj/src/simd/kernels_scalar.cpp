#include <cmath>
#include <cstring>

#include "biasprobe/simd/kernels.hpp"

namespace biasprobe::simd {
namespace {

void gemm_scalar(int m, int n, int k, const float* a, int lda, const float* b,
                 int ldb, float* c, int ldc, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    float* crow = c + static_cast<std::size_t>(i) * ldc;
    if (!accumulate) std::memset(crow, 0, sizeof(float) * n);
    const float* arow = a + static_cast<std::size_t>(i) * lda;
    for (int p = 0; p < k; ++p) {
      const float av = arow[p];
      if (av == 0.0f) continue;
      const float* brow = b + static_cast<std::size_t>(p) * ldb;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void axpy_scalar(std::size_t n, float alpha, const float* x, float* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void affine_scalar(std::size_t n, const float* x, float scale, float shift,
                   float* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * scale + shift;
}

double sum_scalar(const float* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double sum_sq_dev_scalar(const float* x, std::size_t n, double mean) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(x[i]) - mean;
    s += d * d;
  }
  return s;
}

double l1_distance_scalar(const float* x, const float* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    s += std::fabs(static_cast<double>(x[i]) - static_cast<double>(y[i]));
  return s;
}

void adam_scalar(std::size_t n, float* param, const float* grad, float* m,
                 float* v, const AdamArgs& args) {
  const float one_minus_b1 = 1.0f - args.beta1;
  const float one_minus_b2 = 1.0f - args.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const float g = grad[i];
    m[i] = args.beta1 * m[i] + one_minus_b1 * g;
    v[i] = args.beta2 * v[i] + one_minus_b2 * (g * g);
    const float m_hat = m[i] / args.bias_correction1;
    const float v_hat = v[i] / args.bias_correction2;
    param[i] = param[i] - args.lr * (m_hat / (std::sqrt(v_hat) + args.eps));
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{gemm_scalar,      axpy_scalar,
                                 affine_scalar,    sum_scalar,
                                 sum_sq_dev_scalar, l1_distance_scalar,
                                 adam_scalar};
  return table;
}

}  // namespace biasprobe::simd
