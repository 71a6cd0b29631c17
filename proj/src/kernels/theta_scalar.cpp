#include <array>
#include <cmath>
#include <numbers>

#include "lamelab/theta_kernels.hpp"

namespace lamelab::kernels {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

// i^d for d = 0..3
constexpr std::array<cplx, 4> kIPow = {cplx{1, 0}, cplx{0, 1}, cplx{-1, 0}, cplx{0, -1}};

struct TailState {
  std::array<double, kMaxThetaOrder + 1> peak{};

  // Records the term and reports whether it is negligible for every order.
  bool absorb(double mag, double c, int max_order) {
    bool small = true;
    double w = mag;
    const double ac = std::abs(c);
    for (int d = 0; d <= max_order; ++d) {
      if (w > peak[d]) peak[d] = w;
      if (w > 0.0 && w > tol * peak[d]) small = false;
      w *= ac;
    }
    return small;
  }
  double tol = 0.0;
};

}  // namespace

bool theta_batch_scalar(const ThetaSeriesParams& p, std::span<const cplx> z,
                        int max_order, std::span<cplx> out) {
  const int stride = max_order + 1;
  const cplx T = p.period;
  const double im_t = T.imag();
  const cplx q2 = std::exp(2.0 * kPi * kI * T);
  bool ok = true;

  for (std::size_t k = 0; k < z.size(); ++k) {
    const cplx w = z[k] + p.beta;
    const double n0 = std::round(-w.imag() / im_t - p.alpha);
    const double nu0 = n0 + p.alpha;

    cplx t0 = std::exp(kPi * kI * nu0 * nu0 * T + 2.0 * kPi * kI * nu0 * w);
    cplx r_up = std::exp(kPi * kI * T * (2.0 * nu0 + 1.0) + 2.0 * kPi * kI * w);
    cplx r_dn = std::exp(-kPi * kI * T * (2.0 * nu0 - 1.0) - 2.0 * kPi * kI * w);

    std::array<cplx, kMaxThetaOrder + 1> acc{};
    TailState tail;
    tail.tol = p.tol;

    auto add = [&](cplx t, double c) {
      cplx v = t;
      for (int d = 0; d <= max_order; ++d) {
        acc[d] += v;
        v *= c;
      }
    };

    const double c0 = 2.0 * kPi * nu0;
    add(t0, c0);
    tail.absorb(std::abs(t0), c0, max_order);

    cplx t_up = t0, t_dn = t0;
    int used = 1;
    bool converged = false;
    for (int j = 1; used + 2 <= p.max_terms; ++j) {
      t_up *= r_up;
      r_up *= q2;
      t_dn *= r_dn;
      r_dn *= q2;
      const double c_up = 2.0 * kPi * (nu0 + j);
      const double c_dn = 2.0 * kPi * (nu0 - j);
      add(t_up, c_up);
      add(t_dn, c_dn);
      used += 2;
      const bool s1 = tail.absorb(std::abs(t_up), c_up, max_order);
      const bool s2 = tail.absorb(std::abs(t_dn), c_dn, max_order);
      if (s1 && s2) {
        converged = true;
        break;
      }
    }
    ok = ok && converged;

    for (int d = 0; d <= max_order; ++d) out[k * stride + d] = kIPow[d % 4] * acc[d];
  }
  return ok;
}

}  // namespace lamelab::kernels
