#pragma once

// Closed-form functions on C^n built from theta factors:
//
//   f(x) = sum_t  c_t * exp(<k_t, x>) * prod_j theta^{(d_j)}[ch_j](<g_j, x> + o_j | m_j tau)
//
// The class is closed under differentiation, argument shifts and linear
// substitutions, and evaluates exactly through the elliptic module.

#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "lamelab/elliptic.hpp"

namespace lamelab {

using CVec = std::vector<cplx>;

struct AffineForm {
  CVec grad;
  cplx offset{};

  cplx operator()(std::span<const cplx> x) const;
  friend bool operator==(const AffineForm&, const AffineForm&) = default;
};

struct ThetaFactor {
  AffineForm form;
  ThetaCharacteristic ch = kOddTheta;
  int modulus_mult = 1;
  int order = 0;
};

struct ThetaTerm {
  cplx coeff{1.0, 0.0};
  CVec exp_cov;  // empty means zero
  std::vector<ThetaFactor> factors;
};

class ThetaSum {
 public:
  ThetaSum() = default;
  ThetaSum(int dim, LatticeParam lat);

  int dim() const { return dim_; }
  const LatticeParam& lattice() const { return lat_; }
  const std::vector<ThetaTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  // Checks dimensions and derivative orders; zero-coefficient terms are dropped.
  void add_term(ThetaTerm term);

  cplx operator()(std::span<const cplx> x) const;
  std::vector<cplx> evaluate_many(std::span<const CVec> xs) const;

 private:
  int dim_ = 0;
  LatticeParam lat_{};
  std::vector<ThetaTerm> terms_;
};

// Term helpers.
ThetaFactor odd_theta(CVec grad, cplx offset, int order = 0);
ThetaSum constant_sum(int dim, const LatticeParam& lat, cplx c);
ThetaSum single_term(int dim, const LatticeParam& lat, ThetaTerm term);

ThetaSum operator+(const ThetaSum& a, const ThetaSum& b);
ThetaSum operator-(const ThetaSum& a, const ThetaSum& b);
ThetaSum operator*(cplx s, const ThetaSum& f);
ThetaSum product(const ThetaSum& a, const ThetaSum& b);

ThetaSum differentiate(const ThetaSum& f, std::span<const cplx> direction);
ThetaSum differentiate(const ThetaSum& f, int axis);

// g(x) = f(x + v)
ThetaSum shift(const ThetaSum& f, std::span<const cplx> v);

// g(x) = f(M x) with M row-major, dim x dim.
ThetaSum substitute_linear(const ThetaSum& f, std::span<const double> m);

struct ThetaRatio {
  ThetaSum num;
  ThetaSum den;

  // NearPole when the denominator vanishes (single-term denominators are
  // checked factor by factor against the 1e-10 guard).
  cplx operator()(std::span<const cplx> x) const;
};

using PointFn = std::function<cplx(std::span<const cplx>)>;

struct FloquetResult {
  cplx multiplier;
  double residual = 0.0;
  bool certified = false;
};

// mu = f(x0 + l) / f(x0), checked at 10 further deterministic sample points.
// NotQuasiPeriodic when the residual exceeds 1e-6.
FloquetResult floquet_factor(const PointFn& f, std::span<const cplx> l, std::span<const cplx> x0);

// Analytic zero test for one factor: distance of its argument to the zero set.
double factor_zero_distance(const ThetaFactor& fac, std::span<const cplx> x, const LatticeParam& lat);

nlohmann::json to_json(const ThetaSum& f);
ThetaSum theta_sum_from_json(const nlohmann::json& j);
nlohmann::json cplx_json(cplx z);
cplx cplx_from_json(const nlohmann::json& j);

}  // namespace lamelab
