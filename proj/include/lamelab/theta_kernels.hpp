#pragma once

// Batched theta-series kernels.
//
// Each kernel evaluates, for every argument z in a batch,
//
//   S_d(z) = sum_n (2 pi i (n + alpha))^d exp(pi i (n + alpha)^2 T + 2 pi i (n + alpha)(z + beta))
//
// for d = 0..max_order, i.e. the z-derivatives of theta[alpha; beta](z | T).
// Terms are generated by a multiplicative recurrence that starts at the
// dominant index and sweeps outward in both directions, so no exp() is
// needed inside the loop. The scalar kernel is the reference; SIMD variants
// must agree with it to rounding.

#include <complex>
#include <span>
#include <string_view>

namespace lamelab::kernels {

using cplx = std::complex<double>;

inline constexpr int kMaxThetaOrder = 8;

struct ThetaSeriesParams {
  cplx period;      // effective modulus T = modulus_mult * tau
  double alpha = 0.5;
  double beta = 0.5;
  double tol = 1e-16;
  int max_terms = 200;
};

// out has z.size() * (max_order + 1) entries, laid out point-major.
// Returns false if some argument hit max_terms before the tail criterion.
using ThetaBatchFn = bool (*)(const ThetaSeriesParams&, std::span<const cplx> z,
                              int max_order, std::span<cplx> out);

bool theta_batch_scalar(const ThetaSeriesParams& p, std::span<const cplx> z,
                        int max_order, std::span<cplx> out);

#if defined(LAMELAB_HAVE_AVX2_KERNEL)
bool theta_batch_avx2(const ThetaSeriesParams& p, std::span<const cplx> z,
                      int max_order, std::span<cplx> out);
#endif

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);

// Best variant supported by the running CPU, unless LAMELAB_SIMD=scalar.
Isa detected_isa();
bool isa_available(Isa isa);
ThetaBatchFn theta_batch_for(Isa isa);

// The kernel selected once at startup.
ThetaBatchFn theta_batch();

}  // namespace lamelab::kernels
