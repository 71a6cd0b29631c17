#pragma once

// Difference B2 operator (van Diejen type, shifts by 2 omega), its commuting
// partner L1 (diagonal shifts by omega), the closed-form Bloch solutions and
// the difference Hermite-Bloch variety in xi_j = exp(omega k_j).

#include <array>
#include <string>
#include <vector>

#include "lamelab/b2cm.hpp"
#include "lamelab/thetaforms.hpp"

namespace lamelab {

struct DifferenceTerm {
  ThetaRatio coeff;
  CVec shift;
};

struct DifferenceOperator {
  std::vector<DifferenceTerm> terms;
  LatticeParam lat;
  cplx omega;

  // sum_t coeff_t(x) f(x + shift_t)
  cplx apply(const PointFn& f, std::span<const cplx> x) const;
  // sum_t |coeff_t(x) f(x + shift_t)|, the natural scale of apply().
  double magnitude(const PointFn& f, std::span<const cplx> x) const;
};

// ResonantOmega when 2w, 4w or 6w lies within 1e-3 of the lattice.
void check_omega(cplx omega, const LatticeParam& lat);

// a0 is stored as its four pieces c+, c-, d+, d- (all with zero shift).
DifferenceOperator build_L(const LatticeParam& lat, cplx omega);
DifferenceOperator build_L1(const LatticeParam& lat, cplx omega);

struct QBlochPoint {
  cplx a1, a2, k1, k2;
  LatticeParam lat;

  std::array<cplx, 2> xi(cplx omega) const { return {std::exp(omega * k1), std::exp(omega * k2)}; }
  // k_j = log(xi_j) / omega, principal branch.
  static QBlochPoint from_xi(cplx a1, cplx a2, cplx xi1, cplx xi2, cplx omega, const LatticeParam& lat);
  QBlochPoint canonical() const;
};

ThetaSum build_phi_q(const QBlochPoint& pt, cplx omega);

// LHS - RHS of the two variety equations, literally in xi.
std::array<cplx, 2> variety_residual_q(cplx a1, cplx a2, cplx xi1, cplx xi2, cplx omega, const LatticeParam& lat);
// Same, divided by the sum of term-magnitude products of each side.
std::array<double, 2> variety_relative_residual_q(cplx a1, cplx a2, cplx xi1, cplx xi2, cplx omega,
                                                  const LatticeParam& lat);

// Evaluation-based G1, G2 and their natural scales.
struct QObstruction {
  cplx G1, G2;
  double scale1 = 0.0, scale2 = 0.0;
};
QObstruction variety_G_q(const QBlochPoint& pt, cplx omega);

struct QSolution {
  cplx eta1, eta2;  // xi_j^2
  cplx xi1, xi2;    // principal square roots
  cplx k1, k2;
  double residual = 0.0;      // relative residual of the xi equations
  bool genericity_ok = true;  // exp(6 w k_j) != theta(a_j - 3w) / theta(a_j + 3w)
};

inline constexpr int kQB2SheetCount = 17;

// Sorted by (Re eta1, Im eta1, Re eta2). CountMismatch when not 17.
std::vector<QSolution> solve_variety_q(cplx a1, cplx a2, cplx omega, const LatticeParam& lat);
std::vector<QSolution> solve_variety_q_raw(cplx a1, cplx a2, cplx omega, const LatticeParam& lat);

struct QEigenCheck {
  cplx E, E1;
  double residual_L = 0.0, residual_L1 = 0.0;
  int samples = 0;
};

// NotEigen when either residual exceeds 1e-8.
QEigenCheck eigen_check_q(const QBlochPoint& pt, cplx omega);

// p = log(xi) / omega + zeta(a); BranchAmbiguity near the branch cut.
cplx limit_map(cplx xi, cplx a, cplx omega, const LatticeParam& lat);

struct LimitRow {
  double omega = 0.0;
  std::vector<double> errors;  // per continuous solution, in its sorted order
  double max_error = 0.0;
  int unmatched_far = 0;       // q-solutions not matched to any continuous one
  double min_unmatched_norm = 0.0;
};

struct LimitReport {
  std::vector<LimitRow> rows;
  std::vector<double> ratios;  // max_error(w_{i+1}) / max_error(w_i)
};

LimitReport limit_check(cplx a1, cplx a2, const std::vector<double>& omegas, const LatticeParam& lat);

// The 8 signed permutations as row-major 2x2 matrices, with det(w).
struct WeylElement {
  std::array<double, 4> m;
  int det;
};
const std::array<WeylElement, 8>& b2_weyl_group();

// sum_w det(w) Phi(w x)
ThetaSum skew_build(const QBlochPoint& pt, cplx omega);

struct BasisReport {
  std::array<double, 8> singular_values{};
  double ratio = 0.0;  // smallest / largest
  int rank = 0;
};

// Evaluation matrix [Phi(w(x0 + nu))] at the eight offsets nu; RankDeficient
// when smallest / largest singular value <= 1e-6.
BasisReport basis_check(const QBlochPoint& pt, cplx omega, std::span<const cplx> x0);

// max |omega^-6 Phi_skew - 64 theta'(0)^2 theta(a1) theta(a2) delta Psi| /
// max |64 ... delta Psi| over sample points, Psi = sum_w psi(w x) of the
// continuous solution with the same (a, k).
double skew_limit_error(const QBlochPoint& pt, cplx omega, const std::vector<CVec>& points);

}  // namespace lamelab
