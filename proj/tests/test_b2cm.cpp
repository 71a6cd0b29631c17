#include <doctest.h>

#include <cmath>

#include "lamelab/b2cm.hpp"
#include "lamelab/errors.hpp"

using namespace lamelab;

namespace {

constexpr cplx kI{0.0, 1.0};
const cplx kA1{0.23, 0.11}, kA2{0.37, -0.08};

}  // namespace

TEST_SUITE("b2cm") {
  TEST_CASE("13 solutions, each on the variety and each an eigenfunction") {
    const LatticeParam lat = make_lattice({0.3, 1.2});
    const auto sols = solve_variety(kA1, kA2, lat);
    REQUIRE(sols.size() == kB2SheetCount);
    for (const auto& s : sols) {
      CHECK(s.residual < 1e-11);
      const BlochPointB2 pt{kA1, kA2, s.k1, s.k2, lat};
      const auto G = variety_G(pt);
      const auto scale = variety_scale(kA1, kA2, s.p1, s.p2, lat);
      const auto R = variety_residual(kA1, kA2, s.p1, s.p2, lat);
      CHECK(std::abs(R[0]) < 1e-10 * scale[0]);
      CHECK(std::abs(R[1]) < 1e-10 * scale[1]);
      CHECK(std::isfinite(std::abs(G[0])));
      CHECK(eigen_check(pt).residual < 1e-8);
    }
  }

  TEST_CASE("Phi vanishes on the four mirror families") {
    const LatticeParam lat = make_lattice(kI);
    const auto s = solve_variety(kA1, kA2, lat).front();
    for (double r : vanishing_residuals(build_phi({kA1, kA2, s.k1, s.k2, lat}))) CHECK(r < 1e-10);
  }

  TEST_CASE("p and k are related through zeta(a)") {
    const LatticeParam lat = make_lattice(kI);
    const BlochPointB2 pt = BlochPointB2::from_p(kA1, kA2, {1.0, 0.5}, {-0.3, 2.0}, lat);
    const auto p = pt.p();
    CHECK(std::abs(p[0] - cplx{1.0, 0.5}) < 1e-14);
    CHECK(std::abs(p[1] - cplx{-0.3, 2.0}) < 1e-14);
  }

  TEST_CASE("the canonical representative leaves psi unchanged up to scale") {
    const LatticeParam lat = make_lattice(kI);
    const auto s = solve_variety(kA1, kA2, lat)[3];
    const BlochPointB2 pt{kA1 + 1.0 + lat.tau, kA2 - 1.0, s.k1 + 2.0 * std::numbers::pi * kI, s.k2, lat};
    const BlochPointB2 c = pt.canonical();
    const ThetaSum f = build_phi(pt), g = build_phi(c);
    const CVec x{cplx{0.11, 0.2}, cplx{-0.3, 0.05}}, y{cplx{0.27, -0.1}, cplx{0.06, 0.33}};
    CHECK(std::abs(f(x) / g(x) - f(y) / g(y)) < 1e-10 * std::abs(f(x) / g(x)));
  }

  TEST_CASE("multipliers match the numerical Floquet factors") {
    const LatticeParam lat = make_lattice(kI);
    const auto s = solve_variety(kA1, kA2, lat)[5];
    const BlochPointB2 pt{kA1, kA2, s.k1, s.k2, lat};
    const ThetaRatio psi{build_phi(pt), b2_delta(lat)};
    const PointFn f = [&psi](std::span<const cplx> x) { return psi(x); };
    const auto lam = pt.multipliers();
    const CVec x0 = b2_sample_points(1, lat, 0.1, 42)[0];
    CHECK(std::abs(floquet_factor(f, CVec{1.0, 0.0}, x0).multiplier - lam[0]) < 1e-10 * std::abs(lam[0]));
    CHECK(std::abs(floquet_factor(f, CVec{0.0, 1.0}, x0).multiplier - lam[1]) < 1e-10 * std::abs(lam[1]));
  }

  TEST_CASE("energies are invariant under exchanging the two coordinates") {
    const LatticeParam lat = make_lattice(kI);
    const auto s = solve_variety(kA1, kA2, lat)[2];
    const cplx E = eigen_check({kA1, kA2, s.k1, s.k2, lat}).E;
    const cplx Es = eigen_check({kA2, kA1, s.k2, s.k1, lat}).E;
    CHECK(std::abs(E - Es) < 1e-8 * std::max(1.0, std::abs(E)));
  }

  TEST_CASE("the vertical component is reported") {
    try {
      solve_variety(kA1, -kA1 + 1.0, make_lattice(kI));
      FAIL("expected VerticalComponent");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::VerticalComponent);
    }
  }

  TEST_CASE("sample points keep their distance from the singular lines") {
    const LatticeParam lat = make_lattice(kI);
    for (const CVec& x : b2_sample_points(30, lat, 0.1, 7))
      for (cplx v : {x[0], x[1], x[0] - x[1], x[0] + x[1]}) CHECK(lattice_distance(v, lat.tau) >= 0.1);
    CHECK(b2_sample_points(5, lat, 0.1, 7) == b2_sample_points(5, lat, 0.1, 7));
  }
}
