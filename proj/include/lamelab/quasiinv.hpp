#pragma once

// Elliptic potentials u(x) = sum_alpha c_alpha wp(alpha(x)), the
// quasi-invariance test on their singular hyperplanes, the operator catalog
// (root systems and deformed root systems) and the one-dimensional elliptic
// locus equations.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "lamelab/thetaforms.hpp"

namespace lamelab {

struct PotentialTerm {
  AffineForm alpha;
  int m = 1;
  // Overrides m(m+1)(alpha0, alpha0); used for perturbed potentials.
  std::optional<cplx> coeff;
  std::string label;
};

struct PotentialSpec {
  int dim = 0;
  std::vector<PotentialTerm> terms;
  LatticeParam lat;

  // Non-isotropic gradients, consistent dimensions, positive multiplicities.
  void validate() const;
  cplx coefficient(std::size_t i) const;
};

cplx bilinear(std::span<const cplx> a, std::span<const cplx> b);

cplx potential_eval(const PotentialSpec& spec, std::span<const cplx> x);

struct HyperplaneId {
  int term_index = 0;
  int m = 0;  // lattice shift m + n tau
  int n = 0;
};

struct QuasiInvReport {
  HyperplaneId plane;
  bool pass = false;
  bool residue_ok = true;      // c / (alpha0, alpha0) = m(m+1)
  std::vector<cplx> coeffs;    // Taylor coefficients a_0 .. a_{2m} of g(t)
  double worst = 0.0;          // max_j |a_j| r^j / max(1, |u_reg(x0)|)
  std::vector<cplx> base_point;
  std::string note;
};

QuasiInvReport quasi_invariance_check(const PotentialSpec& spec, const HyperplaneId& h);

// One report per term and lattice shift in `shifts`, ordered by (term, shift).
std::vector<QuasiInvReport> quasi_invariance_all(const PotentialSpec& spec,
                                                 const std::vector<std::pair<int, int>>& shifts = {{0, 0}});

enum class Catalog { A, B2_CM, BC, G2, A_n1, C_n1, BC_n1, Hietarinta, A_n2 };

std::string_view to_string(Catalog c);
Catalog catalog_from_string(std::string_view name);

struct CatalogParams {
  int n = 2;
  int m = 1;
  int l = 0;
  std::array<int, 4> g{0, 0, 0, 0};    // Inozemtsev couplings at the half periods
  std::array<int, 4> ms{1, 1, 1, 1};   // deformed BC
  std::array<int, 4> ls{0, 0, 0, 0};
  int m_short = 1, m_long = 1;         // G2
  std::array<cplx, 3> asq{};           // Hietarinta a_i^2
};

// <m> = max(m, -1 - m)
constexpr int bracket_mult(int m) { return m > -1 - m ? m : -1 - m; }

PotentialSpec builtin(Catalog name, const CatalogParams& params, const LatticeParam& lat);

// Sum_{j != i} m_j (m_j + 1) wp^{(2s-1)}(x_i - x_j) for i and s = 1..m_i.
std::vector<cplx> locus_residual(std::span<const cplx> poles, std::span<const int> mults,
                                 const LatticeParam& lat);

struct LocusResult {
  std::vector<cplx> poles;
  int iterations = 0;
  double residual = 0.0;
};

// Damped Gauss-Newton with the first pole pinned; NoConvergence after 50 steps.
LocusResult locus_solve(std::span<const cplx> initial, std::span<const int> mults, const LatticeParam& lat);

}  // namespace lamelab
