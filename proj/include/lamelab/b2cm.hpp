#pragma once

// Continuous B2 Calogero-Moser operator
//
//   L = -Laplacian + 2wp(x1) + 2wp(x2) + 4wp(x1 - x2) + 4wp(x1 + x2)
//
// and its double-Bloch eigenfunctions psi = Phi / delta, with Phi given in
// closed form by theta products and the spectral parameters (a, k) tied by
// the two polynomial equations of the Hermite-Bloch variety.

#include <array>
#include <string>
#include <vector>

#include "lamelab/quasiinv.hpp"
#include "lamelab/thetaforms.hpp"

namespace lamelab {

struct BlochPointB2 {
  cplx a1, a2;  // theta-shift parameters
  cplx k1, k2;  // quasimomenta
  LatticeParam lat;

  // p_j = k_j + zeta(a_j)
  std::array<cplx, 2> p() const;
  static BlochPointB2 from_p(cplx a1, cplx a2, cplx p1, cplx p2, const LatticeParam& lat);
  // a_j moved into the parallelogram spanned by +-(1+tau)/2 via a -> a - 1
  // and (a, k) -> (a - tau, k - 2 pi i); Phi is unchanged.
  BlochPointB2 canonical() const;
  // Floquet multipliers psi(x + e_j) = lambda_j psi(x), lambda_j = -exp(K_j)
  // with K_j = k_j - pi i.
  std::array<cplx, 2> multipliers() const;
};

// theta(x1) theta(x2) theta(x1 - x2) theta(x1 + x2)
ThetaSum b2_delta(const LatticeParam& lat);

// DegenerateA when theta(a_j) vanishes.
ThetaSum build_phi(const BlochPointB2& pt);

// Normalized residuals of the four vanishing conditions on x1 = 0, x2 = 0,
// x1 + x2 = 0 and x1 - x2 = 0 (8 sample points per line).
std::array<double, 4> vanishing_residuals(const ThetaSum& phi);

// G1 = d1 d2 Phi(0,0), G2 = d1 d2^3 Phi(0,0)
std::array<cplx, 2> variety_G(const BlochPointB2& pt);

// Residuals of the two variety equations (LHS - RHS).
std::array<cplx, 2> variety_residual(cplx a1, cplx a2, cplx p1, cplx p2, const LatticeParam& lat);
// Sum of term magnitudes of each equation, for relative residuals.
std::array<double, 2> variety_scale(cplx a1, cplx a2, cplx p1, cplx p2, const LatticeParam& lat);

struct B2Solution {
  cplx p1, p2;
  cplx k1, k2;
  double residual = 0.0;  // relative, max over the two equations
  std::string component = "generic";
  bool genericity_ok = true;  // k_j theta(a_j) + theta'(a_j) != 0 for both j
};

inline constexpr int kB2SheetCount = 13;

// All non-trivial solutions (p1, p2), sorted by (Re p1, Im p1, Re p2).
// VerticalComponent when a1 = +-a2 modulo the lattice; CountMismatch when
// the number found differs from 13.
std::vector<B2Solution> solve_variety(cplx a1, cplx a2, const LatticeParam& lat);
// Same without the count check.
std::vector<B2Solution> solve_variety_raw(cplx a1, cplx a2, const LatticeParam& lat);

// (L psi)(x) for psi = num / den, evaluated pointwise from exact derivatives.
PointFn apply_L(const ThetaRatio& psi);
PointFn apply_L(const ThetaSum& f);

struct EigenCheck {
  cplx E;
  double residual = 0.0;  // max |L psi - E psi| / |psi| over the sample points
  int samples = 0;
};

// NotEigen when the residual exceeds 1e-6.
EigenCheck eigen_check(const BlochPointB2& pt);

// Generic real-and-imaginary sample points at distance >= min_dist from all
// singular lines of the B2 potential; deterministic in seed.
std::vector<CVec> b2_sample_points(int count, const LatticeParam& lat, double min_dist, unsigned long long seed);

}  // namespace lamelab
