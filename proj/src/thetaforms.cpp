#include "lamelab/thetaforms.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <tuple>

#include "lamelab/errors.hpp"

namespace lamelab {

namespace {

constexpr double kPoleGuard = 1e-10;

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  cplx s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool all_zero(const CVec& v) {
  return std::all_of(v.begin(), v.end(), [](cplx c) { return c == cplx{}; });
}

// Identity of a theta atom: one theta[ch](form | mult*tau) whose derivatives
// are shared between all factors that reference it.
struct AtomKey {
  std::vector<double> parts;
  ThetaCharacteristic ch;
  int mult;

  friend bool operator<(const AtomKey& a, const AtomKey& b) {
    return std::tie(a.mult, a.ch, a.parts) < std::tie(b.mult, b.ch, b.parts);
  }
};

AtomKey key_of(const ThetaFactor& f) {
  AtomKey k{{}, f.ch, f.modulus_mult};
  k.parts.reserve(2 * f.form.grad.size() + 2);
  for (cplx g : f.form.grad) {
    k.parts.push_back(g.real());
    k.parts.push_back(g.imag());
  }
  k.parts.push_back(f.form.offset.real());
  k.parts.push_back(f.form.offset.imag());
  return k;
}

struct Atom {
  const AffineForm* form;
  ThetaCharacteristic ch;
  int mult;
  int max_order = 0;
};

struct Plan {
  std::vector<Atom> atoms;
  // per term: list of (atom, order)
  std::vector<std::vector<std::pair<int, int>>> uses;
};

Plan make_plan(const std::vector<ThetaTerm>& terms) {
  Plan plan;
  std::map<AtomKey, int> index;
  plan.uses.resize(terms.size());
  for (std::size_t t = 0; t < terms.size(); ++t) {
    for (const auto& f : terms[t].factors) {
      auto [it, inserted] = index.try_emplace(key_of(f), static_cast<int>(plan.atoms.size()));
      if (inserted) plan.atoms.push_back({&f.form, f.ch, f.modulus_mult, 0});
      Atom& a = plan.atoms[it->second];
      a.max_order = std::max(a.max_order, f.order);
      plan.uses[t].emplace_back(it->second, f.order);
    }
  }
  return plan;
}

}  // namespace

cplx AffineForm::operator()(std::span<const cplx> x) const {
  return dot(grad, x) + offset;
}

ThetaSum::ThetaSum(int dim, LatticeParam lat) : dim_(dim), lat_(lat) {
  if (dim < 0) fail(ErrorKind::DimensionMismatch, "negative dimension");
  lat_.validate();
}

void ThetaSum::add_term(ThetaTerm term) {
  if (term.coeff == cplx{}) return;
  if (term.exp_cov.empty()) term.exp_cov.assign(dim_, cplx{});
  if (static_cast<int>(term.exp_cov.size()) != dim_)
    fail(ErrorKind::DimensionMismatch, "exponential covector dimension");
  for (const auto& f : term.factors) {
    if (static_cast<int>(f.form.grad.size()) != dim_)
      fail(ErrorKind::DimensionMismatch, "factor gradient dimension");
    if (f.order < 0 || f.order > kMaxThetaOrder)
      fail(ErrorKind::OrderOverflow, "factor derivative order " + std::to_string(f.order));
    if (f.modulus_mult < 1) fail(ErrorKind::BadParams, "modulus multiplier must be positive");
  }
  terms_.push_back(std::move(term));
}

std::vector<cplx> ThetaSum::evaluate_many(std::span<const CVec> xs) const {
  for (const auto& x : xs)
    if (static_cast<int>(x.size()) != dim_) fail(ErrorKind::DimensionMismatch, "point dimension");

  const std::size_t npts = xs.size();
  std::vector<cplx> result(npts, cplx{});
  if (terms_.empty() || npts == 0) return result;

  const Plan plan = make_plan(terms_);
  const std::size_t natoms = plan.atoms.size();

  // Atom values laid out as [atom][point][order], with stride kMaxThetaOrder+1.
  constexpr int kStride = kMaxThetaOrder + 1;
  std::vector<cplx> vals(natoms * npts * kStride);

  // Group atoms sharing characteristic and modulus so each group is one
  // batched kernel call over (atoms x points).
  std::map<std::tuple<int, ThetaCharacteristic>, std::vector<int>> groups;
  for (std::size_t a = 0; a < natoms; ++a)
    groups[{plan.atoms[a].mult, plan.atoms[a].ch}].push_back(static_cast<int>(a));

  std::vector<cplx> zs, buf;
  for (const auto& [gk, members] : groups) {
    int order = 0;
    for (int a : members) order = std::max(order, plan.atoms[a].max_order);
    zs.clear();
    for (int a : members)
      for (std::size_t p = 0; p < npts; ++p) zs.push_back((*plan.atoms[a].form)(xs[p]));
    buf.assign(zs.size() * (order + 1), cplx{});
    theta_derivatives_batch(zs, lat_, std::get<1>(gk), std::get<0>(gk), order, buf);
    std::size_t row = 0;
    for (int a : members)
      for (std::size_t p = 0; p < npts; ++p, ++row)
        std::copy_n(buf.begin() + row * (order + 1), order + 1,
                    vals.begin() + (static_cast<std::size_t>(a) * npts + p) * kStride);
  }

  for (std::size_t t = 0; t < terms_.size(); ++t) {
    const ThetaTerm& term = terms_[t];
    const bool has_exp = !all_zero(term.exp_cov);
    for (std::size_t p = 0; p < npts; ++p) {
      cplx v = term.coeff;
      if (has_exp) v *= std::exp(dot(term.exp_cov, xs[p]));
      for (auto [a, d] : plan.uses[t]) v *= vals[(static_cast<std::size_t>(a) * npts + p) * kStride + d];
      result[p] += v;
    }
  }
  return result;
}

cplx ThetaSum::operator()(std::span<const cplx> x) const {
  const CVec pt(x.begin(), x.end());
  return evaluate_many(std::span<const CVec>(&pt, 1))[0];
}

ThetaFactor odd_theta(CVec grad, cplx offset, int order) {
  return ThetaFactor{AffineForm{std::move(grad), offset}, kOddTheta, 1, order};
}

ThetaSum constant_sum(int dim, const LatticeParam& lat, cplx c) {
  ThetaSum s(dim, lat);
  s.add_term(ThetaTerm{c, {}, {}});
  return s;
}

ThetaSum single_term(int dim, const LatticeParam& lat, ThetaTerm term) {
  ThetaSum s(dim, lat);
  s.add_term(std::move(term));
  return s;
}

ThetaSum operator+(const ThetaSum& a, const ThetaSum& b) {
  if (a.dim() != b.dim()) fail(ErrorKind::DimensionMismatch, "sum of different dimensions");
  ThetaSum s(a.dim(), a.lattice());
  for (const auto& t : a.terms()) s.add_term(t);
  for (const auto& t : b.terms()) s.add_term(t);
  return s;
}

ThetaSum operator*(cplx c, const ThetaSum& f) {
  ThetaSum s(f.dim(), f.lattice());
  for (auto t : f.terms()) {
    t.coeff *= c;
    s.add_term(std::move(t));
  }
  return s;
}

ThetaSum operator-(const ThetaSum& a, const ThetaSum& b) { return a + (-1.0) * b; }

ThetaSum product(const ThetaSum& a, const ThetaSum& b) {
  if (a.dim() != b.dim()) fail(ErrorKind::DimensionMismatch, "product of different dimensions");
  ThetaSum s(a.dim(), a.lattice());
  for (const auto& ta : a.terms())
    for (const auto& tb : b.terms()) {
      ThetaTerm t{ta.coeff * tb.coeff, ta.exp_cov, ta.factors};
      for (int i = 0; i < a.dim(); ++i) t.exp_cov[i] += tb.exp_cov[i];
      t.factors.insert(t.factors.end(), tb.factors.begin(), tb.factors.end());
      s.add_term(std::move(t));
    }
  return s;
}

ThetaSum differentiate(const ThetaSum& f, std::span<const cplx> direction) {
  if (static_cast<int>(direction.size()) != f.dim())
    fail(ErrorKind::DimensionMismatch, "direction dimension");
  ThetaSum out(f.dim(), f.lattice());
  for (const auto& term : f.terms()) {
    if (const cplx e = dot(direction, term.exp_cov); e != cplx{}) {
      ThetaTerm t = term;
      t.coeff *= e;
      out.add_term(std::move(t));
    }
    for (std::size_t j = 0; j < term.factors.size(); ++j) {
      const cplx g = dot(direction, term.factors[j].form.grad);
      if (g == cplx{}) continue;
      if (term.factors[j].order + 1 > kMaxThetaOrder)
        fail(ErrorKind::OrderOverflow, "derivative order would exceed " + std::to_string(kMaxThetaOrder));
      ThetaTerm t = term;
      t.coeff *= g;
      t.factors[j].order += 1;
      out.add_term(std::move(t));
    }
  }
  return out;
}

ThetaSum differentiate(const ThetaSum& f, int axis) {
  if (axis < 0 || axis >= f.dim()) fail(ErrorKind::DimensionMismatch, "axis out of range");
  CVec dir(f.dim(), cplx{});
  dir[axis] = 1.0;
  return differentiate(f, dir);
}

ThetaSum shift(const ThetaSum& f, std::span<const cplx> v) {
  if (static_cast<int>(v.size()) != f.dim()) fail(ErrorKind::DimensionMismatch, "shift dimension");
  ThetaSum out(f.dim(), f.lattice());
  for (auto t : f.terms()) {
    t.coeff *= std::exp(dot(t.exp_cov, v));
    for (auto& fac : t.factors) fac.form.offset += dot(fac.form.grad, v);
    out.add_term(std::move(t));
  }
  return out;
}

ThetaSum substitute_linear(const ThetaSum& f, std::span<const double> m) {
  const int n = f.dim();
  if (static_cast<int>(m.size()) != n * n) fail(ErrorKind::DimensionMismatch, "matrix size");
  // <g, M x> = <M^T g, x>
  auto pull = [&](const CVec& g) {
    if (g.empty()) return g;
    CVec r(n, cplx{});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r[j] += g[i] * m[i * n + j];
    return r;
  };
  ThetaSum out(n, f.lattice());
  for (auto t : f.terms()) {
    t.exp_cov = pull(t.exp_cov);
    for (auto& fac : t.factors) fac.form.grad = pull(fac.form.grad);
    out.add_term(std::move(t));
  }
  return out;
}

double factor_zero_distance(const ThetaFactor& fac, std::span<const cplx> x, const LatticeParam& lat) {
  const cplx period = static_cast<double>(fac.modulus_mult) * lat.tau;
  const cplx zero = (0.5 - fac.ch.alpha.value()) * period + (0.5 - fac.ch.beta.value());
  return lattice_distance(fac.form(x) - zero, period);
}

cplx ThetaRatio::operator()(std::span<const cplx> x) const {
  if (den.terms().size() == 1) {
    for (const auto& fac : den.terms()[0].factors)
      if (fac.order == 0 && factor_zero_distance(fac, x, den.lattice()) < kPoleGuard)
        fail(ErrorKind::NearPole, "denominator factor vanishes");
  }
  const cplx d = den(x);
  if (d == cplx{}) fail(ErrorKind::NearPole, "denominator vanishes");
  return num(x) / d;
}

FloquetResult floquet_factor(const PointFn& f, std::span<const cplx> l, std::span<const cplx> x0) {
  const std::size_t n = x0.size();
  if (l.size() != n) fail(ErrorKind::DimensionMismatch, "period dimension");
  auto plus = [&](std::span<const cplx> x) {
    CVec y(x.begin(), x.end());
    for (std::size_t i = 0; i < n; ++i) y[i] += l[i];
    return y;
  };
  const cplx f0 = f(x0);
  if (f0 == cplx{}) fail(ErrorKind::NotQuasiPeriodic, "f(x0) = 0");
  FloquetResult r;
  r.multiplier = f(plus(x0)) / f0;

  std::mt19937_64 rng(0xF10C);
  std::uniform_real_distribution<double> u(-0.45, 0.45);
  for (int s = 0; s < 10; ++s) {
    CVec x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = x0[i] + cplx(u(rng), u(rng));
    const cplx fx = f(x);
    const double scale = std::abs(r.multiplier * fx);
    if (scale == 0.0) continue;
    r.residual = std::max(r.residual, std::abs(f(plus(x)) - r.multiplier * fx) / scale);
  }
  if (r.residual > 1e-6)
    fail(ErrorKind::NotQuasiPeriodic, "residual " + std::to_string(r.residual));
  r.certified = r.residual <= 1e-9;
  return r;
}

}  // namespace lamelab
