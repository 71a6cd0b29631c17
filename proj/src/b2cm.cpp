#include "lamelab/b2cm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "lamelab/errors.hpp"
#include "lamelab/polysolve.hpp"

namespace lamelab {

namespace {

using std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

// Polynomials in the formal variables A, B, C, D standing for derivatives of
// theta(x1 + a1), theta(x2 + a2), theta(x1 - x2), theta(x1 + x2).
using Mono = std::array<int, 4>;
using FormalPoly = std::map<Mono, cplx>;

FormalPoly fmul(const FormalPoly& a, const FormalPoly& b) {
  FormalPoly r;
  for (const auto& [ma, ca] : a)
    for (const auto& [mb, cb] : b) {
      Mono m;
      for (int i = 0; i < 4; ++i) m[i] = ma[i] + mb[i];
      r[m] += ca * cb;
    }
  return r;
}

FormalPoly fadd(FormalPoly a, const FormalPoly& b, cplx s = 1.0) {
  for (const auto& [m, c] : b) a[m] += s * c;
  return a;
}

FormalPoly fconst(cplx c) { return {{{0, 0, 0, 0}, c}}; }

// b_ij of the closed form, as polynomials in A, B, C, D.
std::array<std::array<FormalPoly, 3>, 3> formal_coefficients(cplx lambda) {
  // U = A - B - C, V = A + B - D. With U = A + B - C the sign-flip
  // conditions on x1 = +-x2 fail; this choice reproduces the expanded b21.
  const FormalPoly u{{{1, 0, 0, 0}, 1.0}, {{0, 1, 0, 0}, -1.0}, {{0, 0, 1, 0}, -1.0}};
  const FormalPoly v{{{1, 0, 0, 0}, 1.0}, {{0, 1, 0, 0}, 1.0}, {{0, 0, 0, 1}, -1.0}};
  const FormalPoly ul = fadd(fmul(u, u), fconst(-lambda));
  const FormalPoly vl = fadd(fmul(v, v), fconst(-lambda));
  std::array<std::array<FormalPoly, 3>, 3> b;
  b[2][2] = fconst(1.0);
  b[2][1] = fmul(fconst(2.0), u);
  b[1][2] = fmul(fconst(2.0), v);
  b[2][0] = ul;
  b[0][2] = vl;
  b[1][1] = fmul(fconst(4.0), fmul(u, v));
  b[1][0] = fmul(fconst(2.0), fmul(v, ul));
  b[0][1] = fmul(fconst(2.0), fmul(u, vl));
  b[0][0] = fmul(ul, vl);
  return b;
}

// Coefficients (ascending in p) of p^3 + 3z' p + z'' and the quintic.
poly::Poly cubic_part(const std::vector<cplx>& z) { return {z[2], 3.0 * z[1], 0.0, 1.0}; }

poly::Poly quintic_part(const std::vector<cplx>& z) {
  return {z[4] + 10.0 * z[1] * z[2], 5.0 * z[3] + 15.0 * z[1] * z[1], 10.0 * z[2], 10.0 * z[1], 0.0, 1.0};
}

// x * P(a2; y) - y * P(a1; x)
poly::BiPoly variety_equation(const poly::Poly& p1, const poly::Poly& p2) {
  const poly::Poly id{0.0, 1.0};
  return poly::outer(id, p2) - poly::outer(p1, id);
}

double abs_eval(const poly::BiPoly& f, cplx x, cplx y) {
  double s = 0.0, yk = 1.0;
  for (const auto& c : f.c) {
    double xk = 1.0;
    for (cplx v : c) {
      s += std::abs(v) * xk * yk;
      xk *= std::abs(x);
    }
    yk *= std::abs(y);
  }
  return s;
}

struct VarietyPolys {
  poly::BiPoly f, g;
};

VarietyPolys variety_polys(cplx a1, cplx a2, const LatticeParam& lat) {
  if (lattice_distance(a1, lat.tau) < 1e-8 || lattice_distance(a2, lat.tau) < 1e-8)
    fail(ErrorKind::NearPole, "a_j at a lattice point");
  const auto z1 = zlog_derivatives(a1, lat, 5);
  const auto z2 = zlog_derivatives(a2, lat, 5);
  return {variety_equation(cubic_part(z1), cubic_part(z2)), variety_equation(quintic_part(z1), quintic_part(z2))};
}

double reduce_coordinate(double v) { return v - std::floor(v + 0.5); }

}  // namespace

std::array<cplx, 2> BlochPointB2::p() const { return {k1 + zlog(a1, lat), k2 + zlog(a2, lat)}; }

BlochPointB2 BlochPointB2::from_p(cplx a1, cplx a2, cplx p1, cplx p2, const LatticeParam& lat) {
  return {a1, a2, p1 - zlog(a1, lat), p2 - zlog(a2, lat), lat};
}

BlochPointB2 BlochPointB2::canonical() const {
  BlochPointB2 r = *this;
  auto reduce = [&](cplx& a, cplx& k) {
    // a = s + t tau
    const double t = a.imag() / lat.tau.imag();
    const double s = a.real() - t * lat.tau.real();
    const double n = t - reduce_coordinate(t);
    const double m = s - reduce_coordinate(s);
    a -= m + n * lat.tau;
    k -= 2.0 * pi * kI * n;
  };
  reduce(r.a1, r.k1);
  reduce(r.a2, r.k2);
  return r;
}

std::array<cplx, 2> BlochPointB2::multipliers() const {
  return {-std::exp(k1 - pi * kI), -std::exp(k2 - pi * kI)};
}

ThetaSum b2_delta(const LatticeParam& lat) {
  return single_term(2, lat,
                     {1.0,
                      {},
                      {odd_theta({1.0, 0.0}, 0.0), odd_theta({0.0, 1.0}, 0.0), odd_theta({1.0, -1.0}, 0.0),
                       odd_theta({1.0, 1.0}, 0.0)}});
}

ThetaSum build_phi(const BlochPointB2& pt) {
  const cplx t1 = theta(pt.a1, pt.lat), t2 = theta(pt.a2, pt.lat);
  if (std::abs(t1) < 1e-12 || std::abs(t2) < 1e-12) fail(ErrorKind::DegenerateA, "theta(a_j) vanishes");
  const cplx pre = 1.0 / (t1 * t2);
  const auto b = formal_coefficients(lambda_tau(pt.lat));

  ThetaSum phi(2, pt.lat);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const cplx kk = std::pow(pt.k1 + pt.k2, i) * std::pow(pt.k1 - pt.k2, j);
      for (const auto& [m, c] : b[i][j]) {
        if (c == cplx{}) continue;
        phi.add_term({pre * kk * c,
                      {pt.k1, pt.k2},
                      {odd_theta({1.0, 0.0}, pt.a1, m[0]), odd_theta({0.0, 1.0}, pt.a2, m[1]),
                       odd_theta({1.0, -1.0}, 0.0, m[2]), odd_theta({1.0, 1.0}, 0.0, m[3])}});
      }
    }
  return phi;
}

std::array<double, 4> vanishing_residuals(const ThetaSum& phi) {
  const cplx tau = phi.lattice().tau;
  // (derivative direction, line direction) per condition
  const std::array<std::pair<CVec, CVec>, 4> cond{{{{1.0, 0.0}, {0.0, 1.0}},
                                                    {{0.0, 1.0}, {1.0, 0.0}},
                                                    {{1.0, 1.0}, {1.0, -1.0}},
                                                    {{1.0, -1.0}, {1.0, 1.0}}}};
  std::array<double, 4> out{};
  for (int c = 0; c < 4; ++c) {
    const auto& [dir, line] = cond[c];
    const ThetaSum d = differentiate(phi, dir);
    double worst = 0.0, scale = 0.0;
    for (int s = 0; s < 8; ++s) {
      const cplx t = cplx(-0.37 + 0.097 * s, 0.0) + (0.08 + 0.061 * s) * tau;
      const CVec x{t * line[0], t * line[1]};
      worst = std::max(worst, std::abs(d(x)));
      // local scale: |Phi| and |D Phi| just off the line
      for (double off : {-0.15, 0.15}) {
        const CVec y{x[0] + off * dir[0], x[1] + off * dir[1]};
        scale = std::max({scale, std::abs(phi(y)), std::abs(d(y))});
      }
    }
    out[c] = worst / (scale > 0.0 ? scale : 1.0);
  }
  return out;
}

std::array<cplx, 2> variety_G(const BlochPointB2& pt) {
  const ThetaSum phi = build_phi(pt);
  const ThetaSum d12 = differentiate(differentiate(phi, 0), 1);
  const ThetaSum d1222 = differentiate(differentiate(d12, 1), 1);
  const CVec origin{0.0, 0.0};
  return {d12(origin), d1222(origin)};
}

std::array<cplx, 2> variety_residual(cplx a1, cplx a2, cplx p1, cplx p2, const LatticeParam& lat) {
  const auto v = variety_polys(a1, a2, lat);
  return {v.f(p1, p2), v.g(p1, p2)};
}

std::array<double, 2> variety_scale(cplx a1, cplx a2, cplx p1, cplx p2, const LatticeParam& lat) {
  const auto v = variety_polys(a1, a2, lat);
  return {abs_eval(v.f, p1, p2), abs_eval(v.g, p1, p2)};
}

std::vector<B2Solution> solve_variety_raw(cplx a1, cplx a2, const LatticeParam& lat) {
  lat.validate();
  if (lattice_distance(a1 - a2, lat.tau) < 1e-8 || lattice_distance(a1 + a2, lat.tau) < 1e-8)
    fail(ErrorKind::VerticalComponent, "a1 = +-a2 modulo the lattice");
  const auto v = variety_polys(a1, a2, lat);
  const poly::BiPoly fx = v.f.dx(), fy = v.f.dy(), gx = v.g.dx(), gy = v.g.dy();

  poly::System2 sys;
  sys.eval = [&](cplx x, cplx y, cplx out[2], cplx jac[2][2]) {
    out[0] = v.f(x, y);
    out[1] = v.g(x, y);
    jac[0][0] = fx(x, y);
    jac[0][1] = fy(x, y);
    jac[1][0] = gx(x, y);
    jac[1][1] = gy(x, y);
  };
  sys.scale = [&](cplx x, cplx y) { return std::min(abs_eval(v.f, x, y), abs_eval(v.g, x, y)); };

  poly::SolveOptions opt;
  opt.deflate_origin = true;
  opt.radii = {0.5, 2.0, 8.0};
  const auto roots = poly::solve_bivariate(v.f, v.g, sys, opt);

  const cplx z1 = zlog(a1, lat), z2 = zlog(a2, lat);
  const cplx t1 = theta(a1, lat), t2 = theta(a2, lat);
  std::vector<B2Solution> out;
  for (const auto& r : roots) {
    if (std::abs(r.x) + std::abs(r.y) < 1e-6) continue;  // trivial component
    B2Solution s;
    s.p1 = r.x;
    s.p2 = r.y;
    s.k1 = r.x - z1;
    s.k2 = r.y - z2;
    const double sf = abs_eval(v.f, r.x, r.y), sg = abs_eval(v.g, r.x, r.y);
    s.residual = std::max(std::abs(v.f(r.x, r.y)) / sf, std::abs(v.g(r.x, r.y)) / sg);
    // k theta(a) + theta'(a) = theta(a) p
    s.genericity_ok = std::abs(t1 * s.p1) > 1e-8 && std::abs(t2 * s.p2) > 1e-8;
    out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [](const B2Solution& a, const B2Solution& b) {
    if (a.p1.real() != b.p1.real()) return a.p1.real() < b.p1.real();
    if (a.p1.imag() != b.p1.imag()) return a.p1.imag() < b.p1.imag();
    return a.p2.real() < b.p2.real();
  });
  return out;
}

std::vector<B2Solution> solve_variety(cplx a1, cplx a2, const LatticeParam& lat) {
  auto out = solve_variety_raw(a1, a2, lat);
  if (static_cast<int>(out.size()) != kB2SheetCount)
    fail(ErrorKind::CountMismatch, "found " + std::to_string(out.size()) + " solutions, expected 13");
  return out;
}

namespace {

struct SecondJet {
  ThetaSum f, f1, f2, f11, f22;
  explicit SecondJet(const ThetaSum& g)
      : f(g), f1(differentiate(g, 0)), f2(differentiate(g, 1)), f11(differentiate(f1, 0)), f22(differentiate(f2, 1)) {}
};

PotentialSpec b2_potential(const LatticeParam& lat) { return builtin(Catalog::B2_CM, {}, lat); }

}  // namespace

PointFn apply_L(const ThetaRatio& psi) {
  auto n = std::make_shared<SecondJet>(psi.num);
  auto d = std::make_shared<SecondJet>(psi.den);
  auto u = std::make_shared<PotentialSpec>(b2_potential(psi.num.lattice()));
  return [n, d, u](std::span<const cplx> x) {
    const cplx dv = d->f(x);
    if (std::abs(dv) < 1e-14) fail(ErrorKind::NearPole, "denominator vanishes");
    const cplx nv = n->f(x);
    const cplx val = nv / dv;
    auto second = [&](const ThetaSum& ni, const ThetaSum& nii, const ThetaSum& di, const ThetaSum& dii) {
      const cplx a = ni(x), b = nii(x), c = di(x), e = dii(x);
      return b / dv - 2.0 * a * c / (dv * dv) - nv * e / (dv * dv) + 2.0 * nv * c * c / (dv * dv * dv);
    };
    const cplx lap = second(n->f1, n->f11, d->f1, d->f11) + second(n->f2, n->f22, d->f2, d->f22);
    return -lap + potential_eval(*u, x) * val;
  };
}

PointFn apply_L(const ThetaSum& f) {
  auto j = std::make_shared<SecondJet>(f);
  auto u = std::make_shared<PotentialSpec>(b2_potential(f.lattice()));
  return [j, u](std::span<const cplx> x) { return -(j->f11(x) + j->f22(x)) + potential_eval(*u, x) * j->f(x); };
}

std::vector<CVec> b2_sample_points(int count, const LatticeParam& lat, double min_dist, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  std::vector<CVec> pts;
  int tries = 0;
  while (static_cast<int>(pts.size()) < count) {
    if (++tries > 100000) fail(ErrorKind::DegenerateSample, "could not place sample points");
    const cplx x1 = unit(rng) + unit(rng) * lat.tau, x2 = unit(rng) + unit(rng) * lat.tau;
    const double d = std::min({lattice_distance(x1, lat.tau), lattice_distance(x2, lat.tau),
                               lattice_distance(x1 - x2, lat.tau), lattice_distance(x1 + x2, lat.tau)});
    if (d >= min_dist) pts.push_back({x1, x2});
  }
  return pts;
}

EigenCheck eigen_check(const BlochPointB2& pt) {
  const ThetaRatio psi{build_phi(pt), b2_delta(pt.lat)};
  const PointFn lpsi = apply_L(psi);
  const auto pts = b2_sample_points(21, pt.lat, 0.05, 0xB2B2);
  EigenCheck res;
  res.E = lpsi(pts[0]) / psi(pts[0]);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const cplx v = psi(pts[i]);
    res.residual = std::max(res.residual, std::abs(lpsi(pts[i]) - res.E * v) / std::abs(v));
  }
  res.samples = static_cast<int>(pts.size()) - 1;
  if (res.residual > 1e-6) fail(ErrorKind::NotEigen, "relative eigen-residual " + std::to_string(res.residual));
  return res;
}

}  // namespace lamelab
