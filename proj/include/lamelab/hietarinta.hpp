#pragma once

// Hietarinta operator in rescaled coordinates
//
//   L = -sum a_i^2 d_i^2 + 2(a1^2+a2^2) wp(x12) + 2(a2^2+a3^2) wp(x23) + 2(a3^2+a1^2) wp(x31)
//
// with a1^2 + a2^2 + a3^2 = 0, and its difference version D with shifts
// omega a_i^2 e_i. Both have eigenfunctions built from the three-term theta
// ansatz Phi(b, c) in the differences x_ij = x_i - x_j.

#include <array>

#include "lamelab/qb2.hpp"
#include "lamelab/thetaforms.hpp"

namespace lamelab {

using C3 = std::array<cplx, 3>;

struct HietParams {
  C3 a_sq;  // a1^2, a2^2, a3^2
  LatticeParam lat;
  cplx omega{};  // zero in the continuous case

  // BadParams unless sum a_i^2 = 0, all nonzero and pairwise distinct.
  void validate() const;
};

// a^2 = (1, e^{2 pi i/3}, e^{4 pi i/3})
C3 default_a_sq();

struct HietBlochPoint {
  C3 b;  // b12, b23, b31 with zero sum
  C3 c;  // ansatz coefficients, up to scale
  C3 k;  // quasimomenta
  cplx t{};
};

// sum_l c_l theta(x12 + b12' + l tau/3) theta(x23 + b23' + l tau/3) theta(x31 + b31' + l tau/3)
// with b_ij' = b_ij + 1/6: at zero offset sum the three products are linearly
// dependent, and a common shift of the offsets does not change the span.
ThetaSum build_phi_h(const C3& b, const C3& c, const LatticeParam& lat);

// BadParams unless b12 + b23 + b31 = 0.
void check_b(const C3& b);

// Kernel of {Phi(0) = 0, residue-free second zero}; DegenerateKernel unless
// the kernel is one-dimensional.
C3 solve_coeffs_cont(const C3& b, const HietParams& p);

struct FiReport {
  C3 F;                     // the three constants (sample means)
  double spread = 0.0;      // max std / |mean| over i
  double sum = 0.0;         // |F1 + F2 + F3| / max |F_i|
  double periodicity = 0.0; // max |F_i(z + 1) - F_i(z)|, |F_i(z + tau) - F_i(z)| relative
  C3 k;
};

// F_i sampled at five points of x_{i-1} = x_{i+1}; k from
// a_{i-1}^2 k_{i-1} - a_{i+1}^2 k_{i+1} = -F_i plus t (a1^-2, a2^-2, a3^-2).
// NotConstant or Incompatible on failure.
FiReport compute_Fi_and_k_cont(const C3& b, const C3& c, const HietParams& p, cplx t);

HietBlochPoint solve_point_cont(const C3& b, const HietParams& p, cplx t = 0.0);

struct HietEigen {
  cplx E;
  double residual = 0.0;
  int samples = 0;
};

// psi = exp(<k, x>) Phi / (theta(x12) theta(x23) theta(x31)); NotEigen above 1e-6.
HietEigen eigen_check_cont(const HietBlochPoint& pt, const HietParams& p);

// Pointwise L psi.
PointFn apply_L_hiet(const HietBlochPoint& pt, const HietParams& p);
ThetaRatio hiet_psi(const HietBlochPoint& pt, const LatticeParam& lat);

// Three-term difference operator; ResonantOmega if omega a_i^2 is near the lattice.
DifferenceOperator build_D_q(const HietParams& p);

// Kernel of the two defining zeros of Phi in the difference case.
C3 solve_coeffs_q(const C3& b, const HietParams& p);

// The defining zeros sit at +-d around m = (w/2)(a1^2 - a2^2, a2^2 - a3^2, a3^2 - a1^2)
// in the x_ij coordinates, so the difference solution at b tends to the
// continuous one at b + m, with error O(w^2).
C3 continuum_b(const C3& b, const HietParams& p);

// Angle between the lines spanned by two coefficient vectors.
double kernel_angle(const C3& u, const C3& v);

struct HietQReport {
  HietBlochPoint point;
  double qscon_product = 0.0;  // |prod of the three right-hand sides - 1|
  double qfcon = 0.0;          // max |Phi| at the two defining points, relative
  double more = 0.0;           // max |Phi| at the four implied points, relative
  double blax = 0.0;           // max relative vanishing residual on the three planes
  cplx E;
  double residual = 0.0;
};

// c from the defining zeros, k from the three exponential relations (u1 = t),
// then all vanishing identities and the eigen-residual of D.
HietQReport solve_point_q(const C3& b, const HietParams& p, cplx t = 0.0);

// psi(x + e_j) / psi(x) for j = 1..3, then psi(x + tau e_j) / psi(x); points
// related by the b-translations share all six.
std::array<cplx, 6> hiet_multipliers(const HietBlochPoint& pt, const LatticeParam& lat);

// The translations of b that leave the solution unchanged: eps1, eps2 and
// their tau multiples (with k shifted by 2 pi i (1,-1,0) and 2 pi i (0,1,-1)).
// c is recomputed from the translated b.
HietBlochPoint translate_b(const HietBlochPoint& pt, int which, const HietParams& p);

}  // namespace lamelab
