#include <doctest.h>

#include <cmath>

#include "lamelab/errors.hpp"
#include "lamelab/qb2.hpp"
#include "lamelab/spectrum.hpp"

using namespace lamelab;

namespace {

constexpr cplx kI{0.0, 1.0};

}  // namespace

TEST_SUITE("spectrum") {
  TEST_CASE("labels") {
    CHECK_THROWS_AS(SpectrumLabel({1, 2}).validate(), Error);
    CHECK(SpectrumLabel{2, 6}.admissible());
    CHECK_FALSE(SpectrumLabel{2, 4}.admissible());
    CHECK_FALSE(SpectrumLabel{0, 2}.admissible());
    CHECK(admissible_by_weights({3, 7}));
    CHECK_FALSE(admissible_by_weights({3, 5}));
  }

  TEST_CASE("the spectrum needs a pure imaginary modulus") {
    CHECK_THROWS_AS(quantize_solve({2, 6}, make_lattice({0.3, 2.0})), Error);
  }

  TEST_CASE("ground state is unique for large Im tau") {
    const LatticeParam lat = make_lattice(4.0 * kI);
    const auto all = quantize_solve_all({2, 6}, lat);
    REQUIRE(all.size() == 1);
    CHECK(all[0].residual < 1e-11);
    CHECK(std::abs(all[0].a1.real()) < 1e-12);
    CHECK(std::abs(all[0].a2.real()) < 1e-12);
  }

  TEST_CASE("continuation and multistart agree") {
    const LatticeParam lat = make_lattice(2.0 * kI);
    const SpectralPoint a = quantize_solve({2, 6}, lat);
    const SpectralPoint b = quantize_solve({2, 6}, lat, std::array{cplx{0.0, 0.1}, cplx{0.0, 0.3}});
    CHECK(std::abs(a.a1 - b.a1) < 1e-10);
    CHECK(std::abs(a.a2 - b.a2) < 1e-10);
    CHECK(std::abs(quantized_relative_residual({2, 6}, a.a1, a.a2, lat)) < 1e-11);
  }

  TEST_CASE("ground state: symmetric, real energy, eigenfunction after symmetrization") {
    const LatticeParam lat = make_lattice(2.0 * kI);
    const SpectralPoint pt = quantize_solve({2, 6}, lat);
    const ThetaRatio Psi = symmetrize(pt, lat);
    const PointFn signed_sum = symmetrize_signed(pt, lat);
    // Pointwise agreement relative to the size of the eight summands.
    const ThetaRatio psi{build_phi(pt.bloch(lat)), b2_delta(lat)};
    for (const CVec& x : real_grid(5)) {
      double terms = 0.0;
      for (const auto& w : b2_weyl_group())
        terms += std::abs(psi(CVec{w.m[0] * x[0] + w.m[1] * x[1], w.m[2] * x[0] + w.m[3] * x[1]}));
      CHECK(std::abs(Psi(x) - signed_sum(x)) <= 1e-12 * terms);
    }
    const RegularityReport reg = regularity_check(Psi, lat);
    CHECK(reg.finite);
    CHECK(reg.weyl_symmetry < 1e-10);
    CHECK(reg.line_reflection < 1e-10);
    const SpectrumEigen e = spectrum_eigen_check(pt, lat);
    CHECK(std::abs(e.E.imag()) < 1e-6 * std::abs(e.E));
    CHECK(e.residual < 1e-7);
  }

  TEST_CASE("wall points vanish after symmetrization") {
    const LatticeParam lat = make_lattice(2.0 * kI);
    for (SpectrumLabel l : {SpectrumLabel{0, 2}, SpectrumLabel{0, 4}, SpectrumLabel{2, 0}}) {
      const SpectralPoint w = wall_point(l, lat, cplx{0.1, 0.27});
      CHECK(w.residual < 1e-9);
      CHECK(symmetrized_norm_ratio(w, lat) < 1e-8);
    }
    CHECK_THROWS_AS(wall_point({2, 6}, lat, 0.3 * kI), Error);
  }

  TEST_CASE("vertical solutions are filtered") {
    CHECK(quantize_solve_all({2, 2}, make_lattice(2.0 * kI)).empty());
  }

  TEST_CASE("real grid stays off the singular lines") {
    const auto g = real_grid(50);
    CHECK(g.size() == 2500);
    for (const CVec& x : g)
      for (cplx v : {x[0], x[1], x[0] - x[1], x[0] + x[1]})
        CHECK(std::abs(v.real() - std::round(v.real())) >= 0.23 / 50 - 1e-12);
  }
}
