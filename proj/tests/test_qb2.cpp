#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lamelab/errors.hpp"
#include "lamelab/qb2.hpp"

using namespace lamelab;
using std::numbers::pi;

namespace {

constexpr cplx kI{0.0, 1.0};
const cplx kA1{0.23, 0.11}, kA2{0.37, -0.08};

}  // namespace

TEST_SUITE("qb2") {
  TEST_CASE("17 solutions that are common eigenfunctions of L and L1") {
    const LatticeParam lat = make_lattice(kI);
    const cplx omega = 0.1;
    const auto sols = solve_variety_q(kA1, kA2, omega, lat);
    REQUIRE(sols.size() == kQB2SheetCount);
    for (const auto& s : sols) {
      CHECK(s.residual < 1e-12);
      const QBlochPoint pt{kA1, kA2, s.k1, s.k2, lat};
      const QObstruction G = variety_G_q(pt, omega);
      CHECK(std::abs(G.G1) < 1e-9 * G.scale1);
      CHECK(std::abs(G.G2) < 1e-9 * G.scale2);
      const QEigenCheck e = eigen_check_q(pt, omega);
      CHECK(e.residual_L < 1e-10);
      CHECK(e.residual_L1 < 1e-10);
    }
  }

  TEST_CASE("flipping both xi signs keeps E and E1") {
    const LatticeParam lat = make_lattice(kI);
    const cplx omega = 0.1;
    const auto s = solve_variety_q(kA1, kA2, omega, lat)[4];
    const QBlochPoint pt{kA1, kA2, s.k1, s.k2, lat};
    QBlochPoint both = pt;
    both.k1 += kI * pi / omega;
    both.k2 += kI * pi / omega;
    const auto e = eigen_check_q(pt, omega), eb = eigen_check_q(both, omega);
    CHECK(std::abs(e.E - eb.E) < 1e-9 * std::abs(e.E));
    CHECK(std::abs(e.E1 - eb.E1) < 1e-9 * std::abs(e.E1));
  }

  TEST_CASE("resonant steps are rejected") {
    const LatticeParam lat = make_lattice(kI);
    for (cplx omega : {cplx{0.5}, cplx{1.0 / 3.0}, cplx{0.0, 0.25}}) {
      try {
        check_omega(omega, lat);
        FAIL("expected ResonantOmega");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ResonantOmega);
      }
    }
    CHECK_NOTHROW(check_omega(0.1, lat));
  }

  TEST_CASE("xi and k are related by the principal logarithm") {
    const LatticeParam lat = make_lattice(kI);
    const QBlochPoint pt = QBlochPoint::from_xi(kA1, kA2, {0.8, 0.3}, {-1.1, 0.2}, 0.1, lat);
    const auto xi = pt.xi(0.1);
    CHECK(std::abs(xi[0] - cplx{0.8, 0.3}) < 1e-14);
    CHECK(std::abs(xi[1] - cplx{-1.1, 0.2}) < 1e-14);
  }

  TEST_CASE("the limit map converges at second order") {
    const auto rep = limit_check(kA1, kA2, {0.05, 0.025, 0.0125}, make_lattice(kI));
    REQUIRE(rep.ratios.size() == 2);
    for (double r : rep.ratios) CHECK(r < 0.4);
    for (const auto& row : rep.rows) CHECK(row.errors.size() == 13);
  }

  TEST_CASE("Weyl group of B2") {
    const auto& W = b2_weyl_group();
    int dets = 0;
    for (const auto& w : W) {
      dets += w.det;
      CHECK(std::abs(w.m[0] * w.m[3] - w.m[1] * w.m[2] - w.det) < 1e-15);
    }
    CHECK(dets == 0);
  }

  TEST_CASE("solution space basis has full rank") {
    const LatticeParam lat = make_lattice(kI);
    const auto s = solve_variety_q(kA1, kA2, 0.1, lat)[0];
    const BasisReport r = basis_check({kA1, kA2, s.k1, s.k2, lat}, 0.1, CVec{cplx{0.13, 0.21}, cplx{-0.27, 0.08}});
    CHECK(r.rank == 8);
    CHECK(r.ratio > 1e-6);
  }
}
