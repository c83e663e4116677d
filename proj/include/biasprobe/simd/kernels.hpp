#pragma once

// Data-parallel inner loops used by the convolution, normalization,
// optimizer and statistics code. Each kernel has a scalar reference
// implementation and an AVX2/FMA variant; the active table is chosen once at
// startup from CPUID and can be pinned with BIASPROBE_ISA=scalar|avx2 or
// force_isa() (tests use the latter to compare the two paths).

#include <cstddef>
#include <string_view>

namespace biasprobe::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct AdamArgs {
  float lr;
  float beta1;
  float beta2;
  float eps;
  float bias_correction1;  // 1 - beta1^t
  float bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  // C[M,N] = (accumulate ? C : 0) + A[M,K] * B[K,N]; all row-major.
  void (*gemm)(int m, int n, int k, const float* a, int lda, const float* b,
               int ldb, float* c, int ldc, bool accumulate);
  // y += alpha * x
  void (*axpy)(std::size_t n, float alpha, const float* x, float* y);
  // y = x * scale + shift
  void (*affine)(std::size_t n, const float* x, float scale, float shift,
                 float* y);
  // Sum accumulated in double.
  double (*sum)(const float* x, std::size_t n);
  // sum (x - mean)^2 accumulated in double.
  double (*sum_sq_dev)(const float* x, std::size_t n, double mean);
  // sum |x - y| accumulated in double.
  double (*l1_distance)(const float* x, const float* y, std::size_t n);
  void (*adam_step)(std::size_t n, float* param, const float* grad, float* m,
                    float* v, const AdamArgs& args);
};

const KernelTable& scalar_kernels();
// Returns nullptr when the binary was built without AVX2 support.
const KernelTable* avx2_kernels();

bool isa_available(Isa isa);
Isa active_isa();
void force_isa(Isa isa);
const KernelTable& kernels();

// RAII override used by equivalence tests.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) : previous_(active_isa()) { force_isa(isa); }
  ~ScopedIsa() { force_isa(previous_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

}  // namespace biasprobe::simd
