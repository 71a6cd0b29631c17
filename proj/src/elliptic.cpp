#include "lamelab/elliptic.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "lamelab/errors.hpp"
#include "lamelab/theta_kernels.hpp"

namespace lamelab {

static_assert(kMaxThetaOrder == kernels::kMaxThetaOrder);

namespace {

constexpr double kPoleGuard = 1e-10;
constexpr double kMinEffectiveImTau = 0.05;

kernels::ThetaSeriesParams series_params(const LatticeParam& lat, const ThetaCharacteristic& ch,
                                         int modulus_mult) {
  if (modulus_mult < 1) fail(ErrorKind::BadParams, "modulus multiplier must be positive");
  const cplx period = static_cast<double>(modulus_mult) * lat.tau;
  if (lat.tau.imag() <= 0.0) fail(ErrorKind::BadModulus, "Im(tau) must be positive");
  if (period.imag() < kMinEffectiveImTau)
    fail(ErrorKind::BadModulus, "effective Im(tau) below 0.05, series too slow");
  return {period, ch.alpha.value(), ch.beta.value(), lat.series_tol, lat.max_terms};
}

void check_order(int order) {
  if (order < 0 || order > kMaxThetaOrder)
    fail(ErrorKind::OrderOverflow, "theta derivative order " + std::to_string(order));
}

void guard_pole(cplx z, const LatticeParam& lat) {
  if (lattice_distance(z, lat.tau) < kPoleGuard)
    fail(ErrorKind::NearPole, "argument within 1e-10 of a lattice point");
}

// d^n log f from the ratios m_j = f^{(j)}/f (moment-to-cumulant recursion).
std::vector<cplx> log_derivatives(std::span<const cplx> ratios, int count) {
  std::vector<cplx> kappa(count + 1);
  for (int n = 1; n <= count; ++n) {
    cplx s = ratios[n];
    double binom = 1.0;  // C(n-1, k-1)
    for (int k = 1; k < n; ++k) {
      s -= binom * kappa[k] * ratios[n - k];
      binom = binom * static_cast<double>(n - k) / static_cast<double>(k);
    }
    kappa[n] = s;
  }
  return {kappa.begin() + 1, kappa.end()};
}

}  // namespace

void LatticeParam::validate() const {
  if (!(tau.imag() > 0.0)) fail(ErrorKind::BadModulus, "Im(tau) must be positive");
  if (!(series_tol > 0.0)) fail(ErrorKind::BadParams, "series_tol must be positive");
  if (max_terms < 10) fail(ErrorKind::BadParams, "max_terms must be at least 10");
}

LatticeParam make_lattice(cplx tau, double series_tol, int max_terms) {
  LatticeParam lat{tau, series_tol, max_terms};
  lat.validate();
  return lat;
}

void theta_derivatives_batch(std::span<const cplx> z, const LatticeParam& lat,
                             const ThetaCharacteristic& ch, int modulus_mult, int max_order,
                             std::span<cplx> out) {
  check_order(max_order);
  const auto params = series_params(lat, ch, modulus_mult);
  if (out.size() < z.size() * static_cast<std::size_t>(max_order + 1))
    fail(ErrorKind::DimensionMismatch, "theta batch output too small");
  if (!kernels::theta_batch()(params, z, max_order, out))
    fail(ErrorKind::NonConvergent, "theta series hit max_terms");
}

void theta_derivatives(cplx z, const LatticeParam& lat, const ThetaCharacteristic& ch,
                       int modulus_mult, int max_order, std::span<cplx> out) {
  check_order(max_order);
  const auto params = series_params(lat, ch, modulus_mult);
  if (!kernels::theta_batch_scalar(params, std::span<const cplx>(&z, 1), max_order, out))
    fail(ErrorKind::NonConvergent, "theta series hit max_terms");
}

cplx theta(cplx z, const LatticeParam& lat, const ThetaCharacteristic& ch, int modulus_mult,
           int order) {
  check_order(order);
  std::array<cplx, kMaxThetaOrder + 1> buf;
  theta_derivatives(z, lat, ch, modulus_mult, order, std::span<cplx>(buf.data(), order + 1));
  return buf[order];
}

double lattice_distance(cplx z, cplx tau) {
  const double n0 = std::round(z.imag() / tau.imag());
  double best = std::numeric_limits<double>::infinity();
  for (double n = n0 - 1; n <= n0 + 1; n += 1.0) {
    const cplx w = z - n * tau;
    const double m0 = std::round(w.real());
    for (double m = m0 - 1; m <= m0 + 1; m += 1.0) best = std::min(best, std::abs(w - m));
  }
  return best;
}

std::vector<cplx> zlog_derivatives(cplx z, const LatticeParam& lat, int count) {
  if (count < 1 || count > kMaxThetaOrder) fail(ErrorKind::OrderOverflow, "zlog order");
  guard_pole(z, lat);
  std::array<cplx, kMaxThetaOrder + 1> th;
  theta_derivatives(z, lat, kOddTheta, 1, count, std::span<cplx>(th.data(), count + 1));
  std::array<cplx, kMaxThetaOrder + 1> ratios;
  for (int j = 0; j <= count; ++j) ratios[j] = th[j] / th[0];
  return log_derivatives(std::span<const cplx>(ratios.data(), count + 1), count);
}

cplx zlog(cplx z, const LatticeParam& lat, int order) {
  if (order < 0 || order >= kMaxThetaOrder) fail(ErrorKind::OrderOverflow, "zlog order");
  return zlog_derivatives(z, lat, order + 1)[order];
}

cplx lambda_tau(const LatticeParam& lat) {
  std::array<cplx, 4> th;
  theta_derivatives(0.0, lat, kOddTheta, 1, 3, th);
  return th[3] / th[1];
}

cplx wp(cplx z, const LatticeParam& lat, int order) {
  if (order < 0 || order > kMaxThetaOrder - 2) fail(ErrorKind::OrderOverflow, "wp order");
  const cplx dz = -zlog(z, lat, order + 1);
  if (order == 0) return dz + lambda_tau(lat) / 3.0;
  return dz;
}

cplx half_period(int s, cplx tau) {
  switch (s) {
    case 0: return 0.0;
    case 1: return 0.5;
    case 2: return 0.5 * tau;
    case 3: return 0.5 * (1.0 + tau);
    default: fail(ErrorKind::BadParams, "half period index must be 0..3");
  }
}

}  // namespace lamelab
