#pragma once

// Dense univariate/bivariate polynomial tools over C: companion-matrix roots,
// Sylvester resultants sampled on a circle and interpolated by DFT, and a
// 2x2 Newton polisher.

#include <complex>
#include <functional>
#include <vector>

namespace lamelab::poly {

using cplx = std::complex<double>;
using Poly = std::vector<cplx>;  // ascending powers

cplx horner(const Poly& p, cplx x);
Poly derivative(const Poly& p);
Poly multiply(const Poly& a, const Poly& b);
Poly add(const Poly& a, const Poly& b, cplx scale = 1.0);
Poly power(const Poly& p, int n);
// p(q(x))
Poly compose(const Poly& p, const Poly& q);
// Drops trailing coefficients below rel * max|c| (weighted by radius^k).
Poly trim(Poly p, double rel, double radius = 1.0);

// All roots via eigenvalues of the balanced companion matrix, then a few
// Newton steps on p. Leading zero coefficients must be trimmed beforehand.
std::vector<cplx> roots(const Poly& p);

// f(x, y) = sum_j c[j](x) y^j
struct BiPoly {
  std::vector<Poly> c;

  int deg_y() const { return static_cast<int>(c.size()) - 1; }
  int deg_x() const;
  cplx operator()(cplx x, cplx y) const;
  Poly at_x(cplx x) const;  // coefficients in y
  BiPoly dx() const;
  BiPoly dy() const;
};

// px(x) * py(y)
BiPoly outer(const Poly& px, const Poly& py);
BiPoly operator+(const BiPoly& a, const BiPoly& b);
BiPoly operator-(const BiPoly& a, const BiPoly& b);
BiPoly operator*(const BiPoly& a, const BiPoly& b);

// Resultant with respect to y, as the Sylvester determinant at fixed x.
cplx sylvester_resultant(const BiPoly& f, const BiPoly& g, cplx x);

// Upper bound for deg_x of Res_y(f, g).
int resultant_degree_bound(const BiPoly& f, const BiPoly& g);

// Coefficients of Res_y(f, g)(x), interpolated from samples on |x| = radius.
Poly eliminant(const BiPoly& f, const BiPoly& g, double radius);

struct Root2 {
  cplx x, y;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Values and Jacobian of a 2x2 analytic system.
struct System2 {
  std::function<void(cplx x, cplx y, cplx out[2], cplx jac[2][2])> eval;
  // residual scale used for the relative stopping test
  std::function<double(cplx x, cplx y)> scale;
};

Root2 newton2(const System2& sys, cplx x0, cplx y0, double tol, int max_iter = 60);

struct SolveOptions {
  double newton_tol = 1e-11;
  double dedup_tol = 1e-8;
  double infinity_cut = 1e6;
  std::vector<double> radii;  // interpolation radii; empty means automatic
  // Remove the (often high-multiplicity) root x = 0 from the eliminant and
  // seed the x = 0 column directly instead.
  bool deflate_origin = false;
};

// All finite solutions of f = g = 0 found by elimination of y, back
// substitution into f and Newton polishing on (f, g). The residual used for
// convergence is the one supplied by `polish`.
std::vector<Root2> solve_bivariate(const BiPoly& f, const BiPoly& g, const System2& polish,
                                   const SolveOptions& opt);

}  // namespace lamelab::poly
