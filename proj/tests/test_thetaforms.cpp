#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lamelab/errors.hpp"
#include "lamelab/thetaforms.hpp"

using namespace lamelab;
using std::numbers::pi;

namespace {

constexpr cplx kI{0.0, 1.0};

// 0.7 e^{<k, x>} theta(x1 - x2 + 0.2) theta'(x1 + 0.1) + 1.3 theta(x2 - 0.3)
ThetaSum sample_sum(const LatticeParam& lat) {
  ThetaSum f(2, lat);
  f.add_term({0.7, {cplx{0.4, 0.1}, cplx{-0.2, 0.3}}, {odd_theta({1.0, -1.0}, 0.2), odd_theta({1.0, 0.0}, 0.1, 1)}});
  f.add_term({1.3, {}, {odd_theta({0.0, 1.0}, -0.3)}});
  return f;
}

}  // namespace

TEST_SUITE("thetaforms") {
  TEST_CASE("differentiation matches central differences") {
    const LatticeParam lat = make_lattice(kI);
    const ThetaSum f = sample_sum(lat);
    const CVec x{cplx{0.13, 0.07}, cplx{-0.21, 0.11}};
    const double h = 1e-5;
    for (int axis = 0; axis < 2; ++axis) {
      CVec xp = x, xm = x;
      xp[axis] += h;
      xm[axis] -= h;
      const cplx fd = (f(xp) - f(xm)) / (2.0 * h);
      CHECK(std::abs(differentiate(f, axis)(x) - fd) < 1e-8 * std::max(1.0, std::abs(fd)));
    }
  }

  TEST_CASE("shift and linear substitution act on arguments") {
    const LatticeParam lat = make_lattice({0.3, 1.2});
    const ThetaSum f = sample_sum(lat);
    const CVec x{cplx{0.13, 0.07}, cplx{-0.21, 0.11}}, v{cplx{0.05, -0.02}, cplx{0.3, 0.01}};
    CHECK(std::abs(shift(f, v)(x) - f(CVec{x[0] + v[0], x[1] + v[1]})) < 1e-13);
    const std::array<double, 4> m{0.0, 1.0, -1.0, 0.0};
    CHECK(std::abs(substitute_linear(f, m)(x) - f(CVec{x[1], -x[0]})) < 1e-13);
  }

  TEST_CASE("sums, products and scaling evaluate pointwise") {
    const LatticeParam lat = make_lattice(kI);
    const ThetaSum f = sample_sum(lat), g = shift(f, CVec{0.1, 0.2});
    const CVec x{cplx{0.3, 0.1}, cplx{0.2, -0.1}};
    CHECK(std::abs((f + g)(x) - (f(x) + g(x))) < 1e-13);
    CHECK(std::abs((f - g)(x) - (f(x) - g(x))) < 1e-13);
    CHECK(std::abs(product(f, g)(x) - f(x) * g(x)) < 1e-12);
    CHECK(std::abs((cplx{2.0, 1.0} * f)(x) - cplx{2.0, 1.0} * f(x)) < 1e-13);
  }

  TEST_CASE("JSON round trip preserves values") {
    const LatticeParam lat = make_lattice({0.3, 1.2});
    const ThetaSum f = sample_sum(lat);
    const ThetaSum g = theta_sum_from_json(to_json(f));
    const CVec x{cplx{0.3, 0.1}, cplx{0.2, -0.1}};
    CHECK(f(x) == g(x));
    CHECK(cplx_from_json(cplx_json({1.5, -2.0})) == cplx{1.5, -2.0});
  }

  TEST_CASE("Floquet factor of theta under the lattice") {
    const LatticeParam lat = make_lattice(kI);
    ThetaSum f(1, lat);
    f.add_term({1.0, {}, {odd_theta({1.0}, 0.0)}});
    const PointFn fn = [&f](std::span<const cplx> x) { return f(x); };
    const CVec x0{cplx{0.21, 0.13}};
    const FloquetResult one = floquet_factor(fn, CVec{1.0}, x0);
    CHECK(one.certified);
    CHECK(std::abs(one.multiplier + 1.0) < 1e-12);
    // theta picks up exp(-pi i tau - 2 pi i z) under z -> z + tau, not a constant.
    CHECK_THROWS_AS(floquet_factor(fn, CVec{lat.tau}, x0), Error);
  }

  TEST_CASE("ratios refuse to evaluate on poles") {
    const LatticeParam lat = make_lattice(kI);
    ThetaSum num = constant_sum(1, lat, 1.0), den(1, lat);
    den.add_term({1.0, {}, {odd_theta({1.0}, 0.0)}});
    const ThetaRatio r{num, den};
    CHECK_THROWS_AS(r(CVec{cplx{0.0, 0.0}}), Error);
    CHECK(std::abs(r(CVec{cplx{0.25, 0.0}}) * theta(0.25, lat) - 1.0) < 1e-13);
  }

  TEST_CASE("dimension mismatches are rejected") {
    const LatticeParam lat = make_lattice(kI);
    ThetaSum f(2, lat);
    CHECK_THROWS_AS(f.add_term({1.0, {}, {odd_theta({1.0}, 0.0)}}), Error);
  }
}
