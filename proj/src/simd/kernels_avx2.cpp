// Compiled with -mavx2 -mfma; only reached after the dispatcher has checked
// CPUID, so nothing in here may run on its own.

#include <immintrin.h>

#include <cmath>
#include <cstring>

#include "biasprobe/simd/kernels.hpp"

namespace biasprobe::simd {
namespace {

inline double hsum_pd(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// 4x16 register block: 8 accumulators, two B loads and four broadcasts per k.
inline void block_4x16(int k, const float* a, int lda, const float* b, int ldb,
                       float* c, int ldc, bool accumulate) {
  __m256 c00, c01, c10, c11, c20, c21, c30, c31;
  if (accumulate) {
    c00 = _mm256_loadu_ps(c);
    c01 = _mm256_loadu_ps(c + 8);
    c10 = _mm256_loadu_ps(c + ldc);
    c11 = _mm256_loadu_ps(c + ldc + 8);
    c20 = _mm256_loadu_ps(c + 2 * ldc);
    c21 = _mm256_loadu_ps(c + 2 * ldc + 8);
    c30 = _mm256_loadu_ps(c + 3 * ldc);
    c31 = _mm256_loadu_ps(c + 3 * ldc + 8);
  } else {
    c00 = c01 = c10 = c11 = c20 = c21 = c30 = c31 = _mm256_setzero_ps();
  }
  const float* a0 = a;
  const float* a1 = a + lda;
  const float* a2 = a + 2 * lda;
  const float* a3 = a + 3 * lda;
  for (int p = 0; p < k; ++p) {
    const float* brow = b + static_cast<std::size_t>(p) * ldb;
    const __m256 b0 = _mm256_loadu_ps(brow);
    const __m256 b1 = _mm256_loadu_ps(brow + 8);
    __m256 av = _mm256_broadcast_ss(a0 + p);
    c00 = _mm256_fmadd_ps(av, b0, c00);
    c01 = _mm256_fmadd_ps(av, b1, c01);
    av = _mm256_broadcast_ss(a1 + p);
    c10 = _mm256_fmadd_ps(av, b0, c10);
    c11 = _mm256_fmadd_ps(av, b1, c11);
    av = _mm256_broadcast_ss(a2 + p);
    c20 = _mm256_fmadd_ps(av, b0, c20);
    c21 = _mm256_fmadd_ps(av, b1, c21);
    av = _mm256_broadcast_ss(a3 + p);
    c30 = _mm256_fmadd_ps(av, b0, c30);
    c31 = _mm256_fmadd_ps(av, b1, c31);
  }
  _mm256_storeu_ps(c, c00);
  _mm256_storeu_ps(c + 8, c01);
  _mm256_storeu_ps(c + ldc, c10);
  _mm256_storeu_ps(c + ldc + 8, c11);
  _mm256_storeu_ps(c + 2 * ldc, c20);
  _mm256_storeu_ps(c + 2 * ldc + 8, c21);
  _mm256_storeu_ps(c + 3 * ldc, c30);
  _mm256_storeu_ps(c + 3 * ldc + 8, c31);
}

// One row of C, columns [j0, n): 8-wide then scalar tail.
inline void row_tail(int k, const float* arow, const float* b, int ldb,
                     float* crow, int j0, int n, bool accumulate) {
  int j = j0;
  for (; j + 8 <= n; j += 8) {
    __m256 acc = accumulate ? _mm256_loadu_ps(crow + j) : _mm256_setzero_ps();
    for (int p = 0; p < k; ++p) {
      acc = _mm256_fmadd_ps(_mm256_broadcast_ss(arow + p),
                            _mm256_loadu_ps(b + static_cast<std::size_t>(p) * ldb + j),
                            acc);
    }
    _mm256_storeu_ps(crow + j, acc);
  }
  for (; j < n; ++j) {
    float acc = accumulate ? crow[j] : 0.0f;
    for (int p = 0; p < k; ++p)
      acc = std::fma(arow[p], b[static_cast<std::size_t>(p) * ldb + j], acc);
    crow[j] = acc;
  }
}

void gemm_avx2(int m, int n, int k, const float* a, int lda, const float* b,
               int ldb, float* c, int ldc, bool accumulate) {
  const int n16 = n - n % 16;
  int i = 0;
  for (; i + 4 <= m; i += 4) {
    const float* ablk = a + static_cast<std::size_t>(i) * lda;
    float* cblk = c + static_cast<std::size_t>(i) * ldc;
    for (int j = 0; j < n16; j += 16)
      block_4x16(k, ablk, lda, b + j, ldb, cblk + j, ldc, accumulate);
    if (n16 < n) {
      for (int r = 0; r < 4; ++r)
        row_tail(k, ablk + static_cast<std::size_t>(r) * lda, b, ldb,
                 cblk + static_cast<std::size_t>(r) * ldc, n16, n, accumulate);
    }
  }
  for (; i < m; ++i)
    row_tail(k, a + static_cast<std::size_t>(i) * lda, b, ldb,
             c + static_cast<std::size_t>(i) * ldc, 0, n, accumulate);
}

void axpy_avx2(std::size_t n, float alpha, const float* x, float* y) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i),
                                            _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void affine_avx2(std::size_t n, const float* x, float scale, float shift,
                 float* y) {
  const __m256 vs = _mm256_set1_ps(scale);
  const __m256 vb = _mm256_set1_ps(shift);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(_mm256_loadu_ps(x + i), vs, vb));
  for (; i < n; ++i) y[i] = std::fma(x[i], scale, shift);
}

double sum_avx2(const float* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
    acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
  }
  double s = hsum_pd(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i];
  return s;
}

double sum_sq_dev_avx2(const float* x, std::size_t n, double mean) {
  const __m256d vm = _mm256_set1_pd(mean);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    const __m256d d0 = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(v)), vm);
    const __m256d d1 = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)), vm);
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  double s = hsum_pd(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = static_cast<double>(x[i]) - mean;
    s += d * d;
  }
  return s;
}

double l1_distance_avx2(const float* x, const float* y, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 vx = _mm256_loadu_ps(x + i);
    const __m256 vy = _mm256_loadu_ps(y + i);
    const __m256d d0 = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(vx)),
                                     _mm256_cvtps_pd(_mm256_castps256_ps128(vy)));
    const __m256d d1 = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(vx, 1)),
                                     _mm256_cvtps_pd(_mm256_extractf128_ps(vy, 1)));
    acc0 = _mm256_add_pd(acc0, _mm256_andnot_pd(sign, d0));
    acc1 = _mm256_add_pd(acc1, _mm256_andnot_pd(sign, d1));
  }
  double s = hsum_pd(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i)
    s += std::fabs(static_cast<double>(x[i]) - static_cast<double>(y[i]));
  return s;
}

// No FMA here: the update must match the scalar kernel bit for bit.
void adam_avx2(std::size_t n, float* param, const float* grad, float* m,
               float* v, const AdamArgs& args) {
  const __m256 b1 = _mm256_set1_ps(args.beta1);
  const __m256 b2 = _mm256_set1_ps(args.beta2);
  const __m256 omb1 = _mm256_set1_ps(1.0f - args.beta1);
  const __m256 omb2 = _mm256_set1_ps(1.0f - args.beta2);
  const __m256 bc1 = _mm256_set1_ps(args.bias_correction1);
  const __m256 bc2 = _mm256_set1_ps(args.bias_correction2);
  const __m256 lr = _mm256_set1_ps(args.lr);
  const __m256 eps = _mm256_set1_ps(args.eps);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 g = _mm256_loadu_ps(grad + i);
    __m256 mv = _mm256_add_ps(_mm256_mul_ps(b1, _mm256_loadu_ps(m + i)),
                              _mm256_mul_ps(omb1, g));
    __m256 vv = _mm256_add_ps(_mm256_mul_ps(b2, _mm256_loadu_ps(v + i)),
                              _mm256_mul_ps(omb2, _mm256_mul_ps(g, g)));
    _mm256_storeu_ps(m + i, mv);
    _mm256_storeu_ps(v + i, vv);
    const __m256 m_hat = _mm256_div_ps(mv, bc1);
    const __m256 v_hat = _mm256_div_ps(vv, bc2);
    const __m256 step = _mm256_div_ps(m_hat, _mm256_add_ps(_mm256_sqrt_ps(v_hat), eps));
    _mm256_storeu_ps(param + i,
                     _mm256_sub_ps(_mm256_loadu_ps(param + i), _mm256_mul_ps(lr, step)));
  }
  const float one_minus_b1 = 1.0f - args.beta1;
  const float one_minus_b2 = 1.0f - args.beta2;
  for (; i < n; ++i) {
    const float g = grad[i];
    m[i] = args.beta1 * m[i] + one_minus_b1 * g;
    v[i] = args.beta2 * v[i] + one_minus_b2 * (g * g);
    const float m_hat = m[i] / args.bias_correction1;
    const float v_hat = v[i] / args.bias_correction2;
    param[i] = param[i] - args.lr * (m_hat / (std::sqrt(v_hat) + args.eps));
  }
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{gemm_avx2,       axpy_avx2,
                                 affine_avx2,     sum_avx2,
                                 sum_sq_dev_avx2, l1_distance_avx2,
                                 adam_avx2};
  return &table;
}

}  // namespace biasprobe::simd
