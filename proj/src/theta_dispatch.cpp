#include <cstdlib>
#include <string_view>

#include "theta_kernels.hpp"

namespace ellcov::kernels {

bool kernel_available(KernelKind kind) {
  switch (kind) {
    case KernelKind::Scalar:
      return true;
    case KernelKind::Avx2:
#if defined(ELLCOV_HAVE_AVX2_KERNEL)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

KernelKind active_kernel() {
  static const KernelKind kind = [] {
    if (const char* env = std::getenv("ELLCOV_SIMD")) {
      if (std::string_view(env) == "scalar") return KernelKind::Scalar;
    }
    return kernel_available(KernelKind::Avx2) ? KernelKind::Avx2 : KernelKind::Scalar;
  }();
  return kind;
}

const char* kernel_name(KernelKind kind) {
  return kind == KernelKind::Avx2 ? "avx2" : "scalar";
}

void horner(KernelKind kind, const CoefficientTable& table,
            const LaneInputs& lanes, std::span<cplx> out) {
#if defined(ELLCOV_HAVE_AVX2_KERNEL)
  if (kind == KernelKind::Avx2 && kernel_available(KernelKind::Avx2)) {
    horner_avx2(table, lanes, out);
    return;
  }
#endif
  (void)kind;
  horner_scalar(table, lanes, out);
}

}  // namespace ellcov::kernels
