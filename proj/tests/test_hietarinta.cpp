#include <doctest.h>

#include <cmath>

#include "lamelab/errors.hpp"
#include "lamelab/hietarinta.hpp"

using namespace lamelab;

namespace {

constexpr cplx kI{0.0, 1.0};

C3 offsets(cplx b12, cplx b23) { return {b12, b23, -(b12 + b23)}; }

}  // namespace

TEST_SUITE("hietarinta") {
  TEST_CASE("parameter validation") {
    const LatticeParam lat = make_lattice(kI);
    CHECK_THROWS_AS((HietParams{{1.0, 1.0, -2.0}, lat, 0.0}.validate()), Error);
    CHECK_THROWS_AS((HietParams{{1.0, 2.0, 0.0}, lat, 0.0}.validate()), Error);
    CHECK_NOTHROW((HietParams{default_a_sq(), lat, 0.0}.validate()));
    CHECK_THROWS_AS(check_b({0.1, 0.2, 0.3}), Error);
  }

  TEST_CASE("F_i are constant with zero sum and psi is an eigenfunction") {
    for (cplx tau : {kI, cplx{0.3, 1.2}}) {
      const HietParams p{default_a_sq(), make_lattice(tau), 0.0};
      const C3 b = offsets({0.21, 0.13}, {-0.34, 0.07});
      const C3 c = solve_coeffs_cont(b, p);
      const FiReport fi = compute_Fi_and_k_cont(b, c, p, 0.0);
      CHECK(fi.sum < 1e-10);
      CHECK(fi.spread < 1e-9);
      CHECK(fi.periodicity < 1e-9);
      const HietBlochPoint pt = solve_point_cont(b, p, {0.3, -0.2});
      CHECK(eigen_check_cont(pt, p).residual < 1e-8);
    }
  }

  TEST_CASE("the free parameter moves k along the inverse squares") {
    const HietParams p{default_a_sq(), make_lattice(kI), 0.0};
    const C3 b = offsets({0.21, 0.13}, {-0.34, 0.07});
    const auto p0 = solve_point_cont(b, p, 0.0), p1 = solve_point_cont(b, p, 1.0);
    for (int i = 0; i < 3; ++i) CHECK(std::abs((p1.k[i] - p0.k[i]) * p.a_sq[i] - 1.0) < 1e-10);
  }

  TEST_CASE("translating b leaves the multipliers unchanged") {
    const HietParams p{default_a_sq(), make_lattice(kI), 0.0};
    const HietBlochPoint pt = solve_point_cont(offsets({0.21, 0.13}, {-0.34, 0.07}), p);
    const auto m0 = hiet_multipliers(pt, p.lat);
    for (int which = 0; which < 4; ++which) {
      const auto m = hiet_multipliers(translate_b(pt, which, p), p.lat);
      for (int j = 0; j < 6; ++j) CHECK(std::abs(m[j] - m0[j]) < 1e-10 * std::abs(m0[j]));
    }
  }

  TEST_CASE("difference solutions satisfy every vanishing identity") {
    const HietParams p{default_a_sq(), make_lattice(kI), 0.1};
    const HietQReport r = solve_point_q(offsets({0.21, 0.13}, {-0.34, 0.07}), p);
    CHECK(r.qfcon < 1e-10);
    CHECK(r.more < 1e-10);
    CHECK(r.qscon_product < 1e-10);
    CHECK(r.blax < 1e-10);
    CHECK(r.residual < 1e-10);
  }

  TEST_CASE("difference kernel tends to the continuous one at second order") {
    const LatticeParam lat = make_lattice(kI);
    const C3 b = offsets({0.21, 0.13}, {-0.34, 0.07});
    double prev = 0.0;
    for (double w : {0.02, 0.01, 0.005}) {
      const HietParams q{default_a_sq(), lat, w}, c{default_a_sq(), lat, 0.0};
      const double angle = kernel_angle(solve_coeffs_q(b, q), solve_coeffs_cont(continuum_b(b, q), c));
      if (prev > 0.0) CHECK(prev / angle > 3.0);
      prev = angle;
    }
    CHECK(prev < 1e-4);
  }

  TEST_CASE("resonant steps are rejected") {
    const HietParams p{default_a_sq(), make_lattice(kI), 1.0};
    CHECK_THROWS_AS(build_D_q(p), Error);
  }
}
