#pragma once

// Square-integrable eigenstates of the continuous B2 operator at pure
// imaginary tau: quantized quasimomenta k = (i pi m, i pi n), the resulting
// transcendental equations for (a1, a2), Weyl symmetrization of psi and the
// regularity of the symmetrized function along the singular lines.

#include <array>
#include <optional>
#include <vector>

#include "lamelab/b2cm.hpp"
#include "lamelab/thetaforms.hpp"

namespace lamelab {

struct SpectrumLabel {
  int m = 0, n = 0;

  // BadParams unless m and n have the same parity.
  void validate() const;
  // n - 4 >= m >= 2 with m = n mod 2
  bool admissible() const;
};

// The same predicate through k = 2 pi i (lambda + rho) with lambda dominant,
// rho = (1, 3), by integer arithmetic on 2 lambda.
bool admissible_by_weights(const SpectrumLabel& label);

struct SpectralPoint {
  SpectrumLabel label;
  cplx a1, a2;
  cplx k1, k2;
  double residual = 0.0;  // relative residual of the two variety equations

  BlochPointB2 bloch(const LatticeParam& lat) const { return {a1, a2, k1, k2, lat}; }
};

// Residuals of the variety equations with p_j = k_j + zeta(a_j), as functions of a.
std::array<cplx, 2> quantized_residual(const SpectrumLabel& label, cplx a1, cplx a2, const LatticeParam& lat);
// Max over the two equations of |LHS - RHS| / (sum of term magnitudes).
double quantized_relative_residual(const SpectrumLabel& label, cplx a1, cplx a2, const LatticeParam& lat);

// Every solution reached from a grid x grid multistart for each a_j over
// the fundamental parallelogram, with a_j reduced modulo 1 and kept only
// when |Im a_j| <= Im tau / 2 and a1 != +-a2 modulo 1. Sorted by (Re a1, Im a1, Re a2, Im a2).
std::vector<SpectralPoint> quantize_solve_all(const SpectrumLabel& label, const LatticeParam& lat, int grid = 12);

// From initial_a if given; otherwise continuation from tau + 2i in four
// steps, then multistart at tau. NoConvergence when nothing converges.
SpectralPoint quantize_solve(const SpectrumLabel& label, const LatticeParam& lat,
                             std::optional<std::array<cplx, 2>> initial_a = std::nullopt);

// For a label with a zero component, say m = 0: at a1 = 1/2 the quasimomentum
// p1 vanishes and both variety equations hold for every a2 = a_free. Psi is
// identically zero along this family. The residual field holds the absolute
// residual. BadParams unless m = 0 or n = 0.
SpectralPoint wall_point(const SpectrumLabel& label, const LatticeParam& lat, cplx a_free);

// Psi(x) = sum_w psi(w x) = (sum_w det(w) Phi(w x)) / delta(x)
ThetaRatio symmetrize(const SpectralPoint& pt, const LatticeParam& lat);

// sum_w eps(w) det(w) psi(w x) with eps the multiplicity character (all
// multiplicities 1), evaluated pointwise from psi.
PointFn symmetrize_signed(const SpectralPoint& pt, const LatticeParam& lat);

struct RegularityReport {
  std::array<double, 4> gamma{};  // x1, x2, x1 + x2, x1 - x2 line families
  double grid_max = 0.0;          // max |Psi| on the 50 x 50 real grid
  bool finite = true;
  double weyl_symmetry = 0.0;  // max |Psi(w x) - Psi(x)| / max |Psi|
  double line_reflection = 0.0;  // same for reflections in x1 = 1, x2 = 1, x1 + x2 = 1, x1 - x2 = 1
};

// Log-log fit of |Psi(x0 + t n)| over t in [1e-3, 1e-2] on each line family.
// SingularOnLine when some fitted exponent is negative.
RegularityReport regularity_check(const ThetaRatio& Psi, const LatticeParam& lat);

struct SpectrumEigen {
  cplx E;               // from psi
  double residual = 0.0;  // max |L Psi - E Psi| / (max(1, |E|) max |Psi|) on the real grid
};

SpectrumEigen spectrum_eigen_check(const SpectralPoint& pt, const LatticeParam& lat);

// sqrt(sum |Psi|^2 / sum |psi|^2) on a real sample grid.
double symmetrized_norm_ratio(const SpectralPoint& pt, const LatticeParam& lat);

// Real-grid samples (x1_i, x2_j) = ((i + 0.5) / n, (j + 0.27) / n), all off the
// singular lines by at least 0.23 / n.
std::vector<CVec> real_grid(int n);

}  // namespace lamelab
