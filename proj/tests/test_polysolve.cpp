#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lamelab/polysolve.hpp"

using namespace lamelab::poly;

namespace {

bool has_root(const std::vector<cplx>& rs, cplx r, double tol) {
  return std::any_of(rs.begin(), rs.end(), [&](cplx x) { return std::abs(x - r) < tol; });
}

}  // namespace

TEST_SUITE("polysolve") {
  TEST_CASE("companion roots of a product of linear factors") {
    const std::vector<cplx> rs{{1.0, 2.0}, {-0.5, 0.0}, {0.0, -3.0}, {2.5, 0.5}};
    Poly p{1.0};
    for (cplx r : rs) p = multiply(p, Poly{-r, 1.0});
    const auto found = roots(p);
    REQUIRE(found.size() == rs.size());
    for (cplx r : rs) CHECK(has_root(found, r, 1e-12));
  }

  TEST_CASE("polynomial algebra") {
    const Poly p{1.0, 2.0, 3.0}, q{0.0, 1.0, 1.0};
    CHECK(horner(p, 2.0) == cplx{17.0});
    CHECK(derivative(p) == Poly{2.0, 6.0});
    CHECK(horner(compose(p, q), 0.5) == horner(p, horner(q, 0.5)));
    CHECK(horner(power(q, 3), 1.5) == std::pow(horner(q, 1.5), 3));
    CHECK(trim(Poly{1.0, 1e-20, 0.0}, 1e-15).size() == 1);
  }

  TEST_CASE("resultant eliminates y from two circles") {
    // x^2 + y^2 - 1 and (x - 1)^2 + y^2 - 1 meet at x = 1/2.
    BiPoly f{{Poly{-1.0, 0.0, 1.0}, Poly{0.0}, Poly{1.0}}};
    BiPoly g{{Poly{0.0, -2.0, 1.0}, Poly{0.0}, Poly{1.0}}};
    const Poly r = trim(eliminant(f, g, 1.0), 1e-12);
    const auto xs = roots(r);
    REQUIRE_FALSE(xs.empty());
    for (cplx x : xs) CHECK(std::abs(x - 0.5) < 1e-6);
    CHECK(std::abs(sylvester_resultant(f, g, 0.5)) < 1e-12);
  }

  TEST_CASE("2x2 Newton converges quadratically to a simple root") {
    System2 sys;
    sys.eval = [](cplx x, cplx y, cplx out[2], cplx jac[2][2]) {
      out[0] = x * x + y * y - 4.0;
      out[1] = x - y;
      jac[0][0] = 2.0 * x;
      jac[0][1] = 2.0 * y;
      jac[1][0] = 1.0;
      jac[1][1] = -1.0;
    };
    sys.scale = [](cplx x, cplx y) { return std::abs(x * x) + std::abs(y * y) + 4.0; };
    const Root2 r = newton2(sys, 1.0, 1.3, 1e-14);
    CHECK(r.converged);
    CHECK(std::abs(r.x - std::sqrt(2.0)) < 1e-13);
    CHECK(std::abs(r.y - std::sqrt(2.0)) < 1e-13);
  }

  TEST_CASE("bivariate solve finds every intersection") {
    // y - x^2 = 0, x + y - 2 = 0: (1, 1) and (-2, 4)
    BiPoly f{{Poly{0.0, 0.0, -1.0}, Poly{1.0}}};
    BiPoly g{{Poly{-2.0, 1.0}, Poly{1.0}}};
    System2 sys;
    sys.eval = [&](cplx x, cplx y, cplx out[2], cplx jac[2][2]) {
      out[0] = f(x, y);
      out[1] = g(x, y);
      jac[0][0] = f.dx()(x, y);
      jac[0][1] = f.dy()(x, y);
      jac[1][0] = g.dx()(x, y);
      jac[1][1] = g.dy()(x, y);
    };
    sys.scale = [](cplx x, cplx y) { return 1.0 + std::abs(x * x) + std::abs(y); };
    const auto sols = solve_bivariate(f, g, sys, {});
    REQUIRE(sols.size() == 2);
    for (const auto& s : sols) CHECK(std::abs(s.y - s.x * s.x) < 1e-12);
  }
}
