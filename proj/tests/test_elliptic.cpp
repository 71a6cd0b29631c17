#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lamelab/elliptic.hpp"
#include "lamelab/errors.hpp"

using namespace lamelab;
using std::numbers::pi;

namespace {

constexpr cplx kI{0.0, 1.0};

// 2 pi q^{1/4} prod (1 - q^{2n})^3 with q = exp(pi i tau)
cplx theta_prime_product(cplx tau) {
  const cplx q = std::exp(pi * kI * tau);
  cplx prod = 1.0;
  for (int n = 1; n < 80; ++n) prod *= std::pow(1.0 - std::pow(q, 2.0 * n), 3);
  return 2.0 * pi * std::exp(pi * kI * tau / 4.0) * prod;
}

}  // namespace

TEST_SUITE("elliptic") {
  TEST_CASE("theta'(0) matches the product formula up to the series sign") {
    for (cplx tau : {kI, cplx{0.3, 1.2}, 2.0 * kI}) {
      const LatticeParam lat = make_lattice(tau);
      const cplx d = theta(0.0, lat, kOddTheta, 1, 1);
      CHECK(std::abs(d + theta_prime_product(tau)) < 1e-13 * std::abs(d));
    }
  }

  TEST_CASE("odd theta is odd, antiperiodic in 1 and vanishes on the lattice") {
    const LatticeParam lat = make_lattice({0.3, 1.2});
    const cplx z{0.27, -0.11};
    CHECK(std::abs(theta(-z, lat) + theta(z, lat)) < 1e-14);
    CHECK(std::abs(theta(z + 1.0, lat) + theta(z, lat)) < 1e-14);
    CHECK(std::abs(theta(1.0 + lat.tau, lat)) < 1e-13);
  }

  TEST_CASE("batched derivatives agree with single evaluations") {
    const LatticeParam lat = make_lattice(kI);
    const std::vector<cplx> zs{{0.1, 0.2}, {-0.4, 0.05}, {0.33, -0.3}};
    std::vector<cplx> out(zs.size() * 5);
    theta_derivatives_batch(zs, lat, kOddTheta, 1, 4, out);
    for (std::size_t i = 0; i < zs.size(); ++i)
      for (int d = 0; d <= 4; ++d)
        CHECK(std::abs(out[i * 5 + d] - theta(zs[i], lat, kOddTheta, 1, d)) <
              1e-13 * std::max(1.0, std::abs(out[i * 5 + d])));
  }

  TEST_CASE("wp has the Laurent normalization 1/z^2 and zeta' = -wp + const") {
    const LatticeParam lat = make_lattice(kI);
    const cplx z{1e-3, 2e-4};
    CHECK(std::abs(z * z * wp(z, lat) - 1.0) < 1e-6);
    const cplx u{0.21, 0.13}, v{-0.17, 0.31};
    CHECK(std::abs((zlog(u, lat, 1) + wp(u, lat)) - (zlog(v, lat, 1) + wp(v, lat))) < 1e-11);
  }

  TEST_CASE("wp is even and doubly periodic") {
    const LatticeParam lat = make_lattice({0.3, 1.2});
    const cplx z{0.19, 0.23};
    CHECK(std::abs(wp(-z, lat) - wp(z, lat)) < 1e-11 * std::abs(wp(z, lat)));
    CHECK(std::abs(wp(z + 1.0, lat) - wp(z, lat)) < 1e-11 * std::abs(wp(z, lat)));
    CHECK(std::abs(wp(z + lat.tau, lat) - wp(z, lat)) < 1e-11 * std::abs(wp(z, lat)));
  }

  TEST_CASE("zlog_derivatives matches zlog order by order") {
    const LatticeParam lat = make_lattice(kI);
    const cplx z{0.31, 0.07};
    const auto d = zlog_derivatives(z, lat, 5);
    for (int k = 0; k < 5; ++k) CHECK(std::abs(d[k] - zlog(z, lat, k)) < 1e-11 * std::max(1.0, std::abs(d[k])));
  }

  TEST_CASE("lambda tends to -pi^2 for large Im tau") {
    CHECK(std::abs(lambda_tau(make_lattice(10.0 * kI)) + pi * pi) < 1e-10);
  }

  TEST_CASE("half periods and lattice distance") {
    const cplx tau{0.3, 1.2};
    CHECK(half_period(0, tau) == cplx{0.0});
    CHECK(std::abs(half_period(3, tau) - (1.0 + tau) / 2.0) < 1e-15);
    CHECK(lattice_distance(2.0 + tau + cplx{0.01, 0.0}, tau) == doctest::Approx(0.01).epsilon(1e-9));
  }

  TEST_CASE("invalid modulus is rejected") {
    try {
      make_lattice({0.3, -1.0}).validate();
      FAIL("expected BadModulus");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::BadModulus);
    }
  }

  TEST_CASE("series budget exhaustion is reported") {
    LatticeParam lat = make_lattice({0.0, 0.05});
    lat.max_terms = 2;
    CHECK_THROWS_AS(theta(cplx{0.3, 0.0}, lat), Error);
  }
}
