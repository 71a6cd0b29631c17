#pragma once

// Scalar elliptic special functions built on the Jacobi theta series with
// rational characteristics: theta derivatives, the theta log-derivative
// family zeta = theta'/theta, Weierstrass p, and lambda(tau).

#include <complex>
#include <numeric>
#include <span>
#include <vector>

namespace lamelab {

using cplx = std::complex<double>;

// Highest z-derivative the theta kernels produce.
inline constexpr int kMaxThetaOrder = 8;

struct LatticeParam {
  cplx tau{0.0, 1.0};
  double series_tol = 1e-16;
  int max_terms = 200;

  // Throws BadModulus / BadParams on invalid input.
  void validate() const;
};

LatticeParam make_lattice(cplx tau, double series_tol = 1e-16, int max_terms = 200);

struct Rational {
  long num = 0;
  long den = 1;

  constexpr Rational() = default;
  constexpr Rational(long n, long d = 1) : num(n), den(d) { normalize(); }

  constexpr double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  constexpr void normalize() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  friend constexpr Rational operator+(Rational a, Rational b) {
    return Rational(a.num * b.den + b.num * a.den, a.den * b.den);
  }
  friend constexpr bool operator==(const Rational&, const Rational&) = default;
  friend constexpr auto operator<=>(const Rational& a, const Rational& b) {
    return a.num * b.den <=> b.num * a.den;
  }
};

struct ThetaCharacteristic {
  Rational alpha{1, 2};
  Rational beta{1, 2};

  friend constexpr bool operator==(const ThetaCharacteristic&, const ThetaCharacteristic&) = default;
  friend constexpr auto operator<=>(const ThetaCharacteristic&, const ThetaCharacteristic&) = default;
};

// theta[1/2; 1/2], the odd Jacobi theta function.
inline constexpr ThetaCharacteristic kOddTheta{};

// order-th z-derivative of theta[alpha; beta](z | modulus_mult * tau).
cplx theta(cplx z, const LatticeParam& lat, const ThetaCharacteristic& ch = kOddTheta,
           int modulus_mult = 1, int order = 0);

// All derivatives 0..max_order at once; out.size() must be max_order + 1.
void theta_derivatives(cplx z, const LatticeParam& lat, const ThetaCharacteristic& ch,
                       int modulus_mult, int max_order, std::span<cplx> out);

// Batched form used by the closed-form evaluator: out is point-major with
// stride max_order + 1. Dispatches to the selected SIMD kernel.
void theta_derivatives_batch(std::span<const cplx> z, const LatticeParam& lat,
                             const ThetaCharacteristic& ch, int modulus_mult, int max_order,
                             std::span<cplx> out);

// Distance from z to the nearest point of Z + tau Z.
double lattice_distance(cplx z, cplx tau);

// zeta^{(order)}(z) with zeta = theta'/theta (odd theta), order 0..kMaxThetaOrder-1.
cplx zlog(cplx z, const LatticeParam& lat, int order = 0);

// zeta, zeta', ..., zeta^{(count-1)} in one theta evaluation.
std::vector<cplx> zlog_derivatives(cplx z, const LatticeParam& lat, int count);

// Weierstrass p with periods 1, tau, and its derivatives (order 0..kMaxThetaOrder-2).
cplx wp(cplx z, const LatticeParam& lat, int order = 0);

// theta'''(0) / theta'(0)
cplx lambda_tau(const LatticeParam& lat);

// Half periods 0, 1/2, tau/2, (1+tau)/2.
cplx half_period(int s, cplx tau);

}  // namespace lamelab
