#include <cstdlib>
#include <string>

#include "lamelab/theta_kernels.hpp"

namespace lamelab::kernels {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(LAMELAB_HAVE_AVX2_KERNEL) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa detected_isa() {
  if (const char* env = std::getenv("LAMELAB_SIMD"); env && std::string(env) == "scalar")
    return Isa::scalar;
  if (isa_available(Isa::avx2)) return Isa::avx2;
  return Isa::scalar;
}

ThetaBatchFn theta_batch_for(Isa isa) {
#if defined(LAMELAB_HAVE_AVX2_KERNEL)
  if (isa == Isa::avx2 && isa_available(Isa::avx2)) return &theta_batch_avx2;
#endif
  (void)isa;
  return &theta_batch_scalar;
}

ThetaBatchFn theta_batch() {
  static const ThetaBatchFn fn = theta_batch_for(detected_isa());
  return fn;
}

}  // namespace lamelab::kernels
