#include "lamelab/qb2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "lamelab/errors.hpp"
#include "lamelab/parallel.hpp"
#include "lamelab/polysolve.hpp"

namespace lamelab {

namespace {

using std::numbers::pi;

// theta(g1 x1 + g2 x2 + offset)
struct Lin {
  double g1, g2;
  cplx offset;
};

ThetaSum theta_product(const LatticeParam& lat, cplx coeff, std::initializer_list<Lin> factors) {
  ThetaTerm t{coeff, {}, {}};
  for (const auto& f : factors) t.factors.push_back(odd_theta({f.g1, f.g2}, f.offset));
  return single_term(2, lat, std::move(t));
}

ThetaRatio ratio(const LatticeParam& lat, cplx coeff, std::initializer_list<Lin> num, std::initializer_list<Lin> den) {
  return {theta_product(lat, coeff, num), theta_product(lat, 1.0, den)};
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

// theta(a + n w) and theta(a - n w) for n = 1, 3, 5
struct ShiftedThetas {
  std::array<cplx, 6> plus, minus;
  ShiftedThetas(cplx a, cplx omega, const LatticeParam& lat) {
    for (int n = 1; n <= 5; n += 2) {
      plus[n] = theta(a + static_cast<double>(n) * omega, lat);
      minus[n] = theta(a - static_cast<double>(n) * omega, lat);
    }
  }
  // theta(a + n w) xi^n - theta(a - n w) xi^-n, and its magnitude scale
  cplx bracket(int n, cplx xi) const { return plus[n] * std::pow(xi, n) - minus[n] * std::pow(xi, -n); }
  double bracket_abs(int n, cplx xi) const {
    return std::abs(plus[n] * std::pow(xi, n)) + std::abs(minus[n] * std::pow(xi, -n));
  }
  cplx bracket_dxi(int n, cplx xi) const {
    return static_cast<double>(n) * (plus[n] * std::pow(xi, n - 1) + minus[n] * std::pow(xi, -n - 1));
  }
  // theta(a + n w) eta^n - theta(a - n w)
  poly::Poly in_eta(int n) const {
    poly::Poly p(n + 1, cplx{});
    p[0] = -minus[n];
    p[n] = plus[n];
    return p;
  }
  double eta_rel(int n, cplx eta) const {
    return std::abs(plus[n] * std::pow(eta, n) - minus[n]) / (std::abs(plus[n] * std::pow(eta, n)) + std::abs(minus[n]));
  }
};

const std::array<std::pair<int, int>, 9> kIndexSet{
    {{0, 4}, {4, 0}, {0, -4}, {-4, 0}, {2, 2}, {2, -2}, {-2, -2}, {-2, 2}, {0, 0}}};

// Points away from the poles of L and L1 coefficients.
std::vector<CVec> q_sample_points(int count, cplx omega, const LatticeParam& lat, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  std::vector<CVec> pts;
  int tries = 0;
  while (static_cast<int>(pts.size()) < count) {
    if (++tries > 100000) fail(ErrorKind::DegenerateSample, "could not place sample points");
    const cplx x1 = unit(rng) + unit(rng) * lat.tau, x2 = unit(rng) + unit(rng) * lat.tau;
    double d = std::numeric_limits<double>::infinity();
    for (cplx z : {x1, x2})
      for (int c = -1; c <= 1; ++c) d = std::min(d, lattice_distance(z + static_cast<double>(c) * omega, lat.tau));
    d = std::min({d, lattice_distance(x1 + x2, lat.tau), lattice_distance(x1 - x2, lat.tau)});
    if (d >= 0.05) pts.push_back({x1, x2});
  }
  return pts;
}

}  // namespace

cplx DifferenceOperator::apply(const PointFn& f, std::span<const cplx> x) const {
  cplx s{};
  for (const auto& t : terms) {
    CVec y(x.begin(), x.end());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += t.shift[i];
    s += t.coeff(x) * f(y);
  }
  return s;
}

double DifferenceOperator::magnitude(const PointFn& f, std::span<const cplx> x) const {
  double s = 0.0;
  for (const auto& t : terms) {
    CVec y(x.begin(), x.end());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += t.shift[i];
    s += std::abs(t.coeff(x) * f(y));
  }
  return s;
}

void check_omega(cplx omega, const LatticeParam& lat) {
  lat.validate();
  for (int n : {2, 4, 6})
    if (lattice_distance(static_cast<double>(n) * omega, lat.tau) < 1e-3)
      fail(ErrorKind::ResonantOmega, std::to_string(n) + " omega is too close to the lattice");
}

DifferenceOperator build_L(const LatticeParam& lat, cplx w) {
  check_omega(w, lat);
  DifferenceOperator op{{}, lat, w};
  const cplx t2 = theta(2.0 * w, lat), t4 = theta(4.0 * w, lat);
  for (double s : {1.0, -1.0}) {
    // a_+- and b_+-
    op.terms.push_back({ratio(lat, 1.0, {{1, 0, -s * w}, {1, 1, -2.0 * s * w}, {1, -1, -2.0 * s * w}},
                              {{1, 0, s * w}, {1, 1, 0.0}, {1, -1, 0.0}}),
                        {2.0 * s * w, 0.0}});
    op.terms.push_back({ratio(lat, 1.0, {{0, 1, -s * w}, {1, 1, -2.0 * s * w}, {1, -1, 2.0 * s * w}},
                              {{0, 1, s * w}, {1, 1, 0.0}, {1, -1, 0.0}}),
                        {0.0, 2.0 * s * w}});
  }
  for (double s : {1.0, -1.0}) {
    // c_+- and d_+-, together a0
    op.terms.push_back({ratio(lat, t2 / t4, {{1, 0, 5.0 * s * w}, {1, 1, -2.0 * s * w}, {1, -1, -2.0 * s * w}},
                              {{1, 0, s * w}, {1, 1, 0.0}, {1, -1, 0.0}}),
                        {0.0, 0.0}});
    op.terms.push_back({ratio(lat, t2 / t4, {{0, 1, 5.0 * s * w}, {1, 1, -2.0 * s * w}, {1, -1, 2.0 * s * w}},
                              {{0, 1, s * w}, {1, 1, 0.0}, {1, -1, 0.0}}),
                        {0.0, 0.0}});
  }
  return op;
}

// Each long root shifts by w (e1 +- e2) under T1^{e1 w} T2^{e2 w}, so its
// factor is theta(x1 +- x2 - w (e1 +- e2)); a factor 2w there breaks the
// commutation with L.
DifferenceOperator build_L1(const LatticeParam& lat, cplx w) {
  check_omega(w, lat);
  DifferenceOperator op{{}, lat, w};
  for (double e1 : {1.0, -1.0})
    for (double e2 : {1.0, -1.0})
      op.terms.push_back({ratio(lat, 1.0,
                                {{1, 0, -w * e1},
                                 {0, 1, -w * e2},
                                 {1, 1, -w * (e1 + e2)},
                                 {1, -1, -w * (e1 - e2)}},
                                {{1, 0, 0.0}, {0, 1, 0.0}, {1, 1, 0.0}, {1, -1, 0.0}}),
                          {e1 * w, e2 * w}});
  return op;
}

QBlochPoint QBlochPoint::from_xi(cplx a1, cplx a2, cplx xi1, cplx xi2, cplx omega, const LatticeParam& lat) {
  return {a1, a2, std::log(xi1) / omega, std::log(xi2) / omega, lat};
}

QBlochPoint QBlochPoint::canonical() const {
  const BlochPointB2 c = BlochPointB2{a1, a2, k1, k2, lat}.canonical();
  return {c.a1, c.a2, c.k1, c.k2, lat};
}

ThetaSum build_phi_q(const QBlochPoint& pt, cplx w) {
  const cplx t2 = theta(2.0 * w, pt.lat), t4 = theta(4.0 * w, pt.lat);
  ThetaSum phi(2, pt.lat);
  for (auto [i, j] : kIndexSet) {
    cplx beta;
    if (i == 0 && j == 0)
      beta = t4 * t4;
    else if (i == 0 || j == 0)
      beta = t2 * t2;
    else
      beta = -t2 * t4;
    const double di = i, dj = j;
    phi.add_term({beta * std::exp(w * (di * pt.k1 + dj * pt.k2)),
                  {pt.k1, pt.k2},
                  {odd_theta({1.0, 0.0}, pt.a1 + di * w), odd_theta({0.0, 1.0}, pt.a2 + dj * w),
                   odd_theta({1.0, 1.0}, -0.5 * (di + dj) * w), odd_theta({1.0, -1.0}, -0.5 * (di - dj) * w)}});
  }
  return phi;
}

std::array<cplx, 2> variety_residual_q(cplx a1, cplx a2, cplx xi1, cplx xi2, cplx w, const LatticeParam& lat) {
  const ShiftedThetas s1(a1, w, lat), s2(a2, w, lat);
  return {s1.bracket(3, xi1) * s2.bracket(1, xi2) - s1.bracket(1, xi1) * s2.bracket(3, xi2),
          s1.bracket(5, xi1) * s2.bracket(3, xi2) - s1.bracket(3, xi1) * s2.bracket(5, xi2)};
}

std::array<double, 2> variety_relative_residual_q(cplx a1, cplx a2, cplx xi1, cplx xi2, cplx w,
                                                  const LatticeParam& lat) {
  const ShiftedThetas s1(a1, w, lat), s2(a2, w, lat);
  const auto r = variety_residual_q(a1, a2, xi1, xi2, w, lat);
  const double n1 = s1.bracket_abs(3, xi1) * s2.bracket_abs(1, xi2) + s1.bracket_abs(1, xi1) * s2.bracket_abs(3, xi2);
  const double n2 = s1.bracket_abs(5, xi1) * s2.bracket_abs(3, xi2) + s1.bracket_abs(3, xi1) * s2.bracket_abs(5, xi2);
  return {std::abs(r[0]) / n1, std::abs(r[1]) / n2};
}

QObstruction variety_G_q(const QBlochPoint& pt, cplx w) {
  const ThetaSum phi = build_phi_q(pt, w);
  auto at = [&](double u, double v) { return phi(CVec{u * w, v * w}); };
  const std::array<cplx, 4> v1{at(1, 1), at(1, -1), at(-1, 1), at(-1, -1)};
  const std::array<cplx, 4> v2{at(1, -3), at(-1, -3), at(1, 3), at(-1, 3)};
  QObstruction g;
  g.G1 = v1[0] - v1[1] - v1[2] + v1[3];
  g.G2 = v2[0] - v2[1] - v2[2] + v2[3];
  for (int i = 0; i < 4; ++i) {
    g.scale1 += std::abs(v1[i]);
    g.scale2 += std::abs(v2[i]);
  }
  return g;
}

std::vector<QSolution> solve_variety_q_raw(cplx a1, cplx a2, cplx w, const LatticeParam& lat) {
  check_omega(w, lat);
  if (lattice_distance(a1 - a2, lat.tau) < 1e-8 || lattice_distance(a1 + a2, lat.tau) < 1e-8)
    fail(ErrorKind::VerticalComponent, "a1 = +-a2 modulo the lattice");
  const ShiftedThetas s1(a1, w, lat), s2(a2, w, lat);

  // Both equations times xi1^n xi2^n become polynomials in eta = xi^2. The
  // solutions cluster around eta = 1 for small omega, so solve in s with
  // eta = 1 + 2 omega s (s is close to k).
  const poly::Poly eta_of_s{1.0, 2.0 * w};
  const poly::Poly id_eta{0.0, 1.0};
  auto in_s = [&](const poly::Poly& p) { return poly::compose(p, eta_of_s); };
  auto times_eta = [&](const poly::Poly& p) { return poly::multiply(p, id_eta); };
  const poly::BiPoly f = poly::outer(in_s(s1.in_eta(3)), in_s(times_eta(s2.in_eta(1)))) -
                         poly::outer(in_s(times_eta(s1.in_eta(1))), in_s(s2.in_eta(3)));
  const poly::BiPoly g = poly::outer(in_s(s1.in_eta(5)), in_s(times_eta(s2.in_eta(3)))) -
                         poly::outer(in_s(times_eta(s1.in_eta(3))), in_s(s2.in_eta(5)));
  const poly::BiPoly fx = f.dx(), fy = f.dy(), gx = g.dx(), gy = g.dy();

  poly::System2 sys;
  sys.eval = [&](cplx x, cplx y, cplx out[2], cplx jac[2][2]) {
    out[0] = f(x, y);
    out[1] = g(x, y);
    jac[0][0] = fx(x, y);
    jac[0][1] = fy(x, y);
    jac[1][0] = gx(x, y);
    jac[1][1] = gy(x, y);
  };
  sys.scale = [&](cplx x, cplx y) { return std::min(abs_eval(f, x, y), abs_eval(g, x, y)); };

  poly::SolveOptions opt;
  opt.radii = {0.5, 2.0, 8.0, 32.0};
  const auto roots = poly::solve_bivariate(f, g, sys, opt);

  // Final polish on the xi equations themselves, whose relative residual is
  // the reported one.
  poly::System2 xi_sys;
  xi_sys.eval = [&](cplx x, cplx y, cplx out[2], cplx jac[2][2]) {
    const cplx b1x = s1.bracket(1, x), b3x = s1.bracket(3, x), b5x = s1.bracket(5, x);
    const cplx b1y = s2.bracket(1, y), b3y = s2.bracket(3, y), b5y = s2.bracket(5, y);
    const cplx d1x = s1.bracket_dxi(1, x), d3x = s1.bracket_dxi(3, x), d5x = s1.bracket_dxi(5, x);
    const cplx d1y = s2.bracket_dxi(1, y), d3y = s2.bracket_dxi(3, y), d5y = s2.bracket_dxi(5, y);
    out[0] = b3x * b1y - b1x * b3y;
    out[1] = b5x * b3y - b3x * b5y;
    jac[0][0] = d3x * b1y - d1x * b3y;
    jac[0][1] = b3x * d1y - b1x * d3y;
    jac[1][0] = d5x * b3y - d3x * b5y;
    jac[1][1] = b5x * d3y - b3x * d5y;
  };
  xi_sys.scale = [&](cplx x, cplx y) {
    return std::min(s1.bracket_abs(3, x) * s2.bracket_abs(1, y) + s1.bracket_abs(1, x) * s2.bracket_abs(3, y),
                    s1.bracket_abs(5, x) * s2.bracket_abs(3, y) + s1.bracket_abs(3, x) * s2.bracket_abs(5, y));
  };

  std::vector<QSolution> out;
  for (const auto& r : roots) {
    QSolution q;
    q.eta1 = 1.0 + 2.0 * w * r.x;
    q.eta2 = 1.0 + 2.0 * w * r.y;
    if (std::abs(q.eta1) < 1e-8 || std::abs(q.eta2) < 1e-8) continue;  // xi = 0 is excluded
    const bool triv1 = s1.eta_rel(3, q.eta1) < 1e-8, triv2 = s2.eta_rel(3, q.eta2) < 1e-8;
    if (triv1 && triv2) continue;  // trivial component
    const poly::Root2 fine = poly::newton2(xi_sys, std::sqrt(q.eta1), std::sqrt(q.eta2), 1e-15, 8);
    q.xi1 = fine.x;
    q.xi2 = fine.y;
    q.eta1 = q.xi1 * q.xi1;
    q.eta2 = q.xi2 * q.xi2;
    q.k1 = std::log(q.xi1) / w;
    q.k2 = std::log(q.xi2) / w;
    const auto rel = variety_relative_residual_q(a1, a2, q.xi1, q.xi2, w, lat);
    q.residual = std::max(rel[0], rel[1]);
    // xi^6 = theta(a - 3w) / theta(a + 3w) violates the guard
    q.genericity_ok = !triv1 && !triv2;
    out.push_back(q);
  }
  std::sort(out.begin(), out.end(), [](const QSolution& a, const QSolution& b) {
    if (a.eta1.real() != b.eta1.real()) return a.eta1.real() < b.eta1.real();
    if (a.eta1.imag() != b.eta1.imag()) return a.eta1.imag() < b.eta1.imag();
    return a.eta2.real() < b.eta2.real();
  });
  return out;
}

std::vector<QSolution> solve_variety_q(cplx a1, cplx a2, cplx w, const LatticeParam& lat) {
  auto out = solve_variety_q_raw(a1, a2, w, lat);
  if (static_cast<int>(out.size()) != kQB2SheetCount)
    fail(ErrorKind::CountMismatch, "found " + std::to_string(out.size()) + " solutions, expected 17");
  return out;
}

QEigenCheck eigen_check_q(const QBlochPoint& pt, cplx w) {
  const DifferenceOperator L = build_L(pt.lat, w), L1 = build_L1(pt.lat, w);
  const ThetaSum phi = build_phi_q(pt, w);
  const PointFn f = [&phi](std::span<const cplx> x) { return phi(x); };
  const auto pts = q_sample_points(21, w, pt.lat, 0x0B2B);
  QEigenCheck res;
  const cplx f0 = f(pts[0]);
  res.E = L.apply(f, pts[0]) / f0;
  res.E1 = L1.apply(f, pts[0]) / f0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const cplx v = f(pts[i]);
    res.residual_L = std::max(res.residual_L, std::abs(L.apply(f, pts[i]) - res.E * v) /
                                                  (L.magnitude(f, pts[i]) + std::abs(res.E * v)));
    res.residual_L1 = std::max(res.residual_L1, std::abs(L1.apply(f, pts[i]) - res.E1 * v) /
                                                    (L1.magnitude(f, pts[i]) + std::abs(res.E1 * v)));
  }
  res.samples = static_cast<int>(pts.size()) - 1;
  if (res.residual_L > 1e-8 || res.residual_L1 > 1e-8)
    fail(ErrorKind::NotEigen, "difference eigen-residual " + std::to_string(std::max(res.residual_L, res.residual_L1)));
  return res;
}

cplx limit_map(cplx xi, cplx a, cplx w, const LatticeParam& lat) {
  const cplx l = std::log(xi);
  if (std::abs(l.imag()) > pi - 0.1) fail(ErrorKind::BranchAmbiguity, "log(xi) is near the branch cut");
  return l / w + zlog(a, lat);
}

LimitReport limit_check(cplx a1, cplx a2, const std::vector<double>& omegas, const LatticeParam& lat) {
  const auto cont = solve_variety(a1, a2, lat);
  LimitReport rep;
  rep.rows.resize(omegas.size());
  parallel_for(omegas.size(), [&](std::size_t idx) {
    const double w = omegas[idx];
    const auto qs = solve_variety_q_raw(a1, a2, w, lat);
    std::vector<std::array<cplx, 2>> ps;
    for (const auto& q : qs) ps.push_back({limit_map(q.xi1, a1, w, lat), limit_map(q.xi2, a2, w, lat)});
    LimitRow row;
    row.omega = w;
    std::vector<bool> used(ps.size(), false);
    for (const auto& c : cont) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t i = 0; i < ps.size(); ++i) {
        const double d = std::hypot(std::abs(ps[i][0] - c.p1), std::abs(ps[i][1] - c.p2));
        if (d < best) {
          best = d;
          arg = i;
        }
      }
      if (!ps.empty()) used[arg] = true;
      row.errors.push_back(best);
      row.max_error = std::max(row.max_error, best);
    }
    row.min_unmatched_norm = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ps.size(); ++i)
      if (!used[i]) {
        ++row.unmatched_far;
        row.min_unmatched_norm = std::min(row.min_unmatched_norm, std::hypot(std::abs(ps[i][0]), std::abs(ps[i][1])));
      }
    rep.rows[idx] = std::move(row);
  });
  for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i)
    rep.ratios.push_back(rep.rows[i + 1].max_error / rep.rows[i].max_error);
  return rep;
}

const std::array<WeylElement, 8>& b2_weyl_group() {
  static const std::array<WeylElement, 8> group = [] {
    std::array<WeylElement, 8> g{};
    int i = 0;
    for (int swap = 0; swap < 2; ++swap)
      for (double e1 : {1.0, -1.0})
        for (double e2 : {1.0, -1.0}) {
          // w = diag(e1, e2) * P
          g[i].m = swap ? std::array<double, 4>{0.0, e1, e2, 0.0} : std::array<double, 4>{e1, 0.0, 0.0, e2};
          g[i].det = static_cast<int>(e1 * e2) * (swap ? -1 : 1);
          ++i;
        }
    return g;
  }();
  return group;
}

namespace {

ThetaSum alternate(const ThetaSum& f) {
  ThetaSum out(2, f.lattice());
  for (const auto& w : b2_weyl_group()) out = out + static_cast<double>(w.det) * substitute_linear(f, w.m);
  return out;
}

}  // namespace

ThetaSum skew_build(const QBlochPoint& pt, cplx w) { return alternate(build_phi_q(pt, w)); }

BasisReport basis_check(const QBlochPoint& pt, cplx w, std::span<const cplx> x0) {
  const ThetaSum phi = build_phi_q(pt, w);
  const std::array<std::array<double, 2>, 8> nu{{{0, 0}, {1, 1}, {-1, 1}, {1, -1}, {2, 0}, {-2, 0}, {0, 2}, {1, 3}}};
  Eigen::Matrix<cplx, 8, 8> m;
  const auto& group = b2_weyl_group();
  for (int r = 0; r < 8; ++r) {
    const cplx y1 = x0[0] + nu[r][0] * w, y2 = x0[1] + nu[r][1] * w;
    for (int c = 0; c < 8; ++c) {
      const auto& g = group[c].m;
      m(r, c) = phi(CVec{g[0] * y1 + g[1] * y2, g[2] * y1 + g[3] * y2});
    }
  }
  // Column scaling removes the arbitrary normalization of each Phi(w x).
  for (int c = 0; c < 8; ++c) m.col(c) /= m.col(c).norm();
  Eigen::JacobiSVD<Eigen::Matrix<cplx, 8, 8>> svd(m);
  BasisReport rep;
  for (int i = 0; i < 8; ++i) rep.singular_values[i] = svd.singularValues()(i);
  rep.ratio = rep.singular_values[7] / rep.singular_values[0];
  rep.rank = 0;
  for (double s : rep.singular_values)
    if (s > 1e-6 * rep.singular_values[0]) ++rep.rank;
  if (rep.rank < 8) fail(ErrorKind::RankDeficient, "evaluation matrix rank " + std::to_string(rep.rank));
  return rep;
}

double skew_limit_error(const QBlochPoint& pt, cplx w, const std::vector<CVec>& points) {
  const ThetaSum skew = skew_build(pt, w);
  // sum_w det(w) Phi_c(w x) = delta(x) sum_w psi(w x), since delta(w x) = det(w) delta(x)
  const ThetaSum cont = alternate(build_phi(BlochPointB2{pt.a1, pt.a2, pt.k1, pt.k2, pt.lat}));
  const cplx tp = theta(0.0, pt.lat, kOddTheta, 1, 1);
  const cplx factor = 64.0 * tp * tp * theta(pt.a1, pt.lat) * theta(pt.a2, pt.lat);
  const cplx w6 = std::pow(w, 6);
  double err = 0.0, ref = 0.0;
  for (const auto& x : points) {
    const cplx target = factor * cont(x);
    err = std::max(err, std::abs(skew(x) / w6 - target));
    ref = std::max(ref, std::abs(target));
  }
  return err / ref;
}

}  // namespace lamelab
