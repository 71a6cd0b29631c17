// AVX2/FMA variant of the theta-series kernel. Four arguments are processed
// per pass in structure-of-arrays form; lanes that meet the tail criterion
// are masked out while the rest keep iterating, mirroring the scalar loop.

#include <immintrin.h>

#include <array>
#include <cmath>
#include <numbers>

#include "lamelab/theta_kernels.hpp"

namespace lamelab::kernels {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cplx kI{0.0, 1.0};
constexpr int kLanes = 4;

struct CVec {
  __m256d re;
  __m256d im;
};

inline CVec cmul(CVec a, CVec b) {
  return {_mm256_fmsub_pd(a.re, b.re, _mm256_mul_pd(a.im, b.im)),
          _mm256_fmadd_pd(a.re, b.im, _mm256_mul_pd(a.im, b.re))};
}

inline CVec load(const std::array<cplx, kLanes>& v) {
  return {_mm256_setr_pd(v[0].real(), v[1].real(), v[2].real(), v[3].real()),
          _mm256_setr_pd(v[0].imag(), v[1].imag(), v[2].imag(), v[3].imag())};
}

inline __m256d cabs(CVec a) {
  return _mm256_sqrt_pd(_mm256_fmadd_pd(a.re, a.re, _mm256_mul_pd(a.im, a.im)));
}

inline __m256d vabs(__m256d x) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x);
}

}  // namespace

bool theta_batch_avx2(const ThetaSeriesParams& p, std::span<const cplx> z,
                      int max_order, std::span<cplx> out) {
  const int stride = max_order + 1;
  const cplx T = p.period;
  const double im_t = T.imag();
  const cplx q2s = std::exp(2.0 * kPi * kI * T);
  const CVec q2{_mm256_set1_pd(q2s.real()), _mm256_set1_pd(q2s.imag())};
  const __m256d tol = _mm256_set1_pd(p.tol);
  const __m256d two_pi = _mm256_set1_pd(2.0 * kPi);
  const __m256d zero = _mm256_setzero_pd();
  bool ok = true;

  for (std::size_t base = 0; base < z.size(); base += kLanes) {
    std::array<cplx, kLanes> t0s, rups, rdns;
    std::array<double, kLanes> nus;
    for (int l = 0; l < kLanes; ++l) {
      const std::size_t k = std::min(base + l, z.size() - 1);
      const cplx w = z[k] + p.beta;
      const double n0 = std::round(-w.imag() / im_t - p.alpha);
      const double nu0 = n0 + p.alpha;
      nus[l] = nu0;
      t0s[l] = std::exp(kPi * kI * nu0 * nu0 * T + 2.0 * kPi * kI * nu0 * w);
      rups[l] = std::exp(kPi * kI * T * (2.0 * nu0 + 1.0) + 2.0 * kPi * kI * w);
      rdns[l] = std::exp(-kPi * kI * T * (2.0 * nu0 - 1.0) - 2.0 * kPi * kI * w);
    }

    const __m256d nu0 = _mm256_setr_pd(nus[0], nus[1], nus[2], nus[3]);
    CVec t_up = load(t0s), t_dn = t_up;
    CVec r_up = load(rups), r_dn = load(rdns);

    std::array<CVec, kMaxThetaOrder + 1> acc;
    __m256d peak[kMaxThetaOrder + 1];
    for (int d = 0; d <= max_order; ++d) {
      acc[d] = {zero, zero};
      peak[d] = zero;
    }

    // all-ones lanes are still iterating
    __m256d active = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));

    auto add = [&](CVec t, __m256d c) {
      CVec v{_mm256_and_pd(t.re, active), _mm256_and_pd(t.im, active)};
      for (int d = 0; d <= max_order; ++d) {
        acc[d].re = _mm256_add_pd(acc[d].re, v.re);
        acc[d].im = _mm256_add_pd(acc[d].im, v.im);
        v.re = _mm256_mul_pd(v.re, c);
        v.im = _mm256_mul_pd(v.im, c);
      }
    };

    // Returns a lane mask that is set where the term is negligible for all orders.
    auto absorb = [&](CVec t, __m256d c) {
      __m256d w = cabs(t);
      const __m256d ac = vabs(c);
      __m256d small = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));
      for (int d = 0; d <= max_order; ++d) {
        const __m256d grown = _mm256_max_pd(peak[d], w);
        peak[d] = _mm256_blendv_pd(peak[d], grown, active);
        const __m256d big = _mm256_and_pd(_mm256_cmp_pd(w, zero, _CMP_GT_OQ),
                                          _mm256_cmp_pd(w, _mm256_mul_pd(tol, peak[d]), _CMP_GT_OQ));
        small = _mm256_andnot_pd(big, small);
        w = _mm256_mul_pd(w, ac);
      }
      return small;
    };

    add(t_up, _mm256_mul_pd(two_pi, nu0));
    absorb(t_up, _mm256_mul_pd(two_pi, nu0));

    int used = 1;
    for (int j = 1; used + 2 <= p.max_terms; ++j) {
      t_up = cmul(t_up, r_up);
      r_up = cmul(r_up, q2);
      t_dn = cmul(t_dn, r_dn);
      r_dn = cmul(r_dn, q2);
      const __m256d jj = _mm256_set1_pd(static_cast<double>(j));
      const __m256d c_up = _mm256_mul_pd(two_pi, _mm256_add_pd(nu0, jj));
      const __m256d c_dn = _mm256_mul_pd(two_pi, _mm256_sub_pd(nu0, jj));
      add(t_up, c_up);
      add(t_dn, c_dn);
      used += 2;
      const __m256d s1 = absorb(t_up, c_up);
      const __m256d s2 = absorb(t_dn, c_dn);
      active = _mm256_andnot_pd(_mm256_and_pd(s1, s2), active);
      if (_mm256_movemask_pd(active) == 0) break;
    }
    if (_mm256_movemask_pd(active) != 0) ok = false;

    alignas(32) double re[kLanes];
    alignas(32) double im[kLanes];
    static constexpr std::array<cplx, 4> ipow = {cplx{1, 0}, cplx{0, 1}, cplx{-1, 0}, cplx{0, -1}};
    for (int d = 0; d <= max_order; ++d) {
      _mm256_store_pd(re, acc[d].re);
      _mm256_store_pd(im, acc[d].im);
      for (int l = 0; l < kLanes && base + l < z.size(); ++l)
        out[(base + l) * stride + d] = ipow[d % 4] * cplx{re[l], im[l]};
    }
  }
  return ok;
}

}  // namespace lamelab::kernels
