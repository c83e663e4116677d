#include <atomic>
#include <cstdlib>
#include <string>

#include "biasprobe/simd/kernels.hpp"

namespace biasprobe::simd {

#ifndef BIASPROBE_HAVE_AVX2
const KernelTable* avx2_kernels() { return nullptr; }
#endif

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  const bool avx2 = isa_available(Isa::avx2);
  if (const char* env = std::getenv("BIASPROBE_ISA")) {
    const std::string requested(env);
    if (requested == "scalar") return Isa::scalar;
    if (requested == "avx2" && avx2) return Isa::avx2;
  }
  return avx2 ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  return isa == Isa::avx2 ? "avx2" : "scalar";
}

bool isa_available(Isa isa) {
  if (isa == Isa::scalar) return true;
  static const bool avx2 = avx2_kernels() != nullptr && cpu_has_avx2();
  return avx2;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  current().store(isa_available(isa) ? isa : Isa::scalar,
                  std::memory_order_relaxed);
}

const KernelTable& kernels() {
  if (active_isa() == Isa::avx2) return *avx2_kernels();
  return scalar_kernels();
}

}  // namespace biasprobe::simd
