#include "lamelab/hietarinta.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "lamelab/errors.hpp"

namespace lamelab {

namespace {

using std::numbers::pi;

constexpr int prev(int i) { return (i + 2) % 3; }
constexpr int next(int i) { return (i + 1) % 3; }

// Gradient of x_i - x_j.
CVec diff_grad(int i, int j) {
  CVec g(3, 0.0);
  g[i] += 1.0;
  g[j] -= 1.0;
  return g;
}

cplx third_tau(int l, const LatticeParam& lat) { return static_cast<double>(l) * lat.tau / 3.0; }

// With b12 + b23 + b31 = 0 the three products are linearly dependent and the
// coefficient system only admits Phi = 0. The space of Phi depends on the
// differences b_ij - b_jk alone, so every offset is moved by the same
// constant, making the offsets sum to 1/2.
constexpr double kOffsetShift = 1.0 / 6.0;

cplx offset(const C3& b, int i, int l, const LatticeParam& lat) { return b[i] + kOffsetShift + third_tau(l, lat); }

// theta(x12 + b12 + l tau/3) theta(x23 + b23 + l tau/3) theta(x31 + b31 + l tau/3) at x
cplx ansatz_term(const C3& b, int l, std::span<const cplx> x, const LatticeParam& lat) {
  cplx v = 1.0;
  for (int i = 0; i < 3; ++i) v *= theta(x[i] - x[next(i)] + offset(b, i, l, lat), lat);
  return v;
}

void normalize(C3& c) {
  int m = 0;
  for (int l = 1; l < 3; ++l)
    if (std::abs(c[l]) > std::abs(c[m])) m = l;
  const cplx s = c[m];
  for (auto& v : c) v /= s;
}

// Null vector of a 2x3 system; the row pair must have rank 2.
C3 kernel_2x3(const std::array<C3, 2>& rows, const std::string& what) {
  Eigen::Matrix3cd m = Eigen::Matrix3cd::Zero();
  for (int r = 0; r < 2; ++r) {
    double n = 0.0;
    for (int l = 0; l < 3; ++l) n = std::max(n, std::abs(rows[r][l]));
    if (n == 0.0) fail(ErrorKind::DegenerateKernel, what + ": zero constraint row");
    for (int l = 0; l < 3; ++l) m(r, l) = rows[r][l] / n;
  }
  Eigen::JacobiSVD<Eigen::Matrix3cd> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double floor = std::max(sv(2), 1e-15 * sv(0));
  if (sv(1) < 1e3 * floor) fail(ErrorKind::DegenerateKernel, what + ": kernel is not one-dimensional");
  C3 c{svd.matrixV()(0, 2), svd.matrixV()(1, 2), svd.matrixV()(2, 2)};
  normalize(c);
  return c;
}

ThetaSum with_exponential(const ThetaSum& f, const C3& k) {
  ThetaSum g(3, f.lattice());
  for (ThetaTerm t : f.terms()) {
    t.exp_cov = CVec(k.begin(), k.end());
    g.add_term(std::move(t));
  }
  return g;
}

// theta(x12) theta(x23) theta(x31)
ThetaSum hiet_delta(const LatticeParam& lat) {
  ThetaTerm t{1.0, {}, {}};
  for (int i = 0; i < 3; ++i) t.factors.push_back(odd_theta(diff_grad(i, next(i)), 0.0));
  return single_term(3, lat, std::move(t));
}

struct Jet3 {
  ThetaSum f;
  std::array<ThetaSum, 3> d1, d2;
  explicit Jet3(const ThetaSum& g) : f(g) {
    for (int j = 0; j < 3; ++j) {
      d1[j] = differentiate(g, j);
      d2[j] = differentiate(d1[j], j);
    }
  }
};

// Points with all x_ij at distance >= min_dist from the lattice, plus any
// extra offsets of the differences supplied.
std::vector<CVec> hiet_sample_points(int count, const LatticeParam& lat, double min_dist, unsigned long long seed,
                                     const std::vector<cplx>& offsets = {0.0}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  std::vector<CVec> pts;
  int tries = 0;
  while (static_cast<int>(pts.size()) < count) {
    if (++tries > 100000) fail(ErrorKind::DegenerateSample, "could not place sample points");
    CVec x(3);
    for (auto& v : x) v = unit(rng) + unit(rng) * lat.tau;
    double d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i)
      for (cplx o : offsets) d = std::min(d, lattice_distance(x[i] - x[next(i)] + o, lat.tau));
    if (d >= min_dist) pts.push_back(std::move(x));
  }
  return pts;
}

// z values for the restriction to x_{i-1} = x_{i+1}, away from both zeros of Phi.
std::vector<cplx> line_samples(int count, cplx second_zero, const LatticeParam& lat, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  std::vector<cplx> zs;
  int tries = 0;
  while (static_cast<int>(zs.size()) < count) {
    if (++tries > 100000) fail(ErrorKind::DegenerateSample, "could not place line samples");
    const cplx z = unit(rng) + unit(rng) * lat.tau;
    if (lattice_distance(z, lat.tau) >= 0.1 && lattice_distance(z - second_zero, lat.tau) >= 0.1) zs.push_back(z);
  }
  return zs;
}

}  // namespace

void HietParams::validate() const {
  lat.validate();
  double m = 0.0;
  for (cplx v : a_sq) m = std::max(m, std::abs(v));
  if (std::abs(a_sq[0] + a_sq[1] + a_sq[2]) > 1e-14 * std::max(1.0, m))
    fail(ErrorKind::BadParams, "a1^2 + a2^2 + a3^2 must vanish");
  for (int i = 0; i < 3; ++i) {
    if (std::abs(a_sq[i]) < 1e-12) fail(ErrorKind::BadParams, "a_i^2 must be nonzero");
    if (std::abs(a_sq[i] - a_sq[next(i)]) < 1e-12) fail(ErrorKind::BadParams, "a_i^2 must be pairwise distinct");
  }
}

C3 default_a_sq() {
  const cplx z3 = std::polar(1.0, 2.0 * pi / 3.0);
  return {1.0, z3, z3 * z3};
}

void check_b(const C3& b) {
  double m = 1.0;
  for (cplx v : b) m = std::max(m, std::abs(v));
  if (std::abs(b[0] + b[1] + b[2]) > 1e-12 * m) fail(ErrorKind::BadParams, "b12 + b23 + b31 must vanish");
}

ThetaSum build_phi_h(const C3& b, const C3& c, const LatticeParam& lat) {
  check_b(b);
  ThetaSum phi(3, lat);
  for (int l = 0; l < 3; ++l) {
    ThetaTerm t{c[l], {}, {}};
    for (int i = 0; i < 3; ++i) t.factors.push_back(odd_theta(diff_grad(i, next(i)), offset(b, i, l, lat)));
    phi.add_term(std::move(t));
  }
  return phi;
}

C3 solve_coeffs_cont(const C3& b, const HietParams& p) {
  p.validate();
  check_b(b);
  const auto& lat = p.lat;
  // c~_l = c_l theta(b12' + l tau/3) theta(b23' + l tau/3) theta(b31' + l tau/3), b' the shifted offsets
  C3 scale, row;
  for (int l = 0; l < 3; ++l) {
    scale[l] = 1.0;
    for (int i = 0; i < 3; ++i) {
      const cplx z = offset(b, i, l, lat);
      if (lattice_distance(z, lat.tau) < 1e-8) fail(ErrorKind::DegenerateKernel, "b_ij + l tau/3 on the lattice");
      scale[l] *= theta(z, lat);
    }
    // a1^2 zeta(b23' + .) + a2^2 zeta(b31' + .) + a3^2 zeta(b12' + .)
    row[l] = 0.0;
    for (int i = 0; i < 3; ++i) row[l] += p.a_sq[i] * zlog(offset(b, next(i), l, lat), lat);
  }
  C3 c = kernel_2x3({C3{1.0, 1.0, 1.0}, row}, "continuous coefficients");
  for (int l = 0; l < 3; ++l) c[l] /= scale[l];
  normalize(c);
  return c;
}

FiReport compute_Fi_and_k_cont(const C3& b, const C3& c, const HietParams& p, cplx t) {
  p.validate();
  const auto& lat = p.lat;
  const ThetaSum phi = build_phi_h(b, c, lat);
  std::array<ThetaSum, 3> dphi;
  for (int j = 0; j < 3; ++j) dphi[j] = differentiate(phi, j);

  // z = x_{i-1,i} = x_{i+1,i}
  auto F = [&](int i, cplx z) {
    CVec x(3, z);
    x[i] = 0.0;
    const int im = prev(i), ip = next(i);
    return (p.a_sq[im] * dphi[im](x) - p.a_sq[ip] * dphi[ip](x)) / phi(x) - (p.a_sq[im] - p.a_sq[ip]) * zlog(z, lat);
  };

  FiReport rep;
  std::array<double, 3> spread{};
  double fmax = 0.0;
  for (int i = 0; i < 3; ++i) {
    const cplx second_zero = b[i] - b[prev(i)];
    const auto zs = line_samples(5, second_zero, lat, 0xF1F1 + static_cast<unsigned>(i));
    std::vector<cplx> vals;
    for (cplx z : zs) {
      const cplx v = F(i, z);
      const double s = std::max(1.0, std::abs(v));
      rep.periodicity = std::max({rep.periodicity, std::abs(F(i, z + 1.0) - v) / s, std::abs(F(i, z + lat.tau) - v) / s});
      vals.push_back(v);
    }
    cplx mean = 0.0;
    for (cplx v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double var = 0.0;
    for (cplx v : vals) var += std::norm(v - mean);
    spread[i] = std::sqrt(var / static_cast<double>(vals.size()));
    rep.F[i] = mean;
    fmax = std::max(fmax, std::abs(mean));
  }
  if (rep.periodicity > 1e-9)
    fail(ErrorKind::NotConstant, "F_i is not elliptic: " + std::to_string(rep.periodicity));
  for (int i = 0; i < 3; ++i) rep.spread = std::max(rep.spread, spread[i] / std::max(std::abs(rep.F[i]), 1e-3 * fmax));
  if (rep.spread > 1e-9) fail(ErrorKind::NotConstant, "F_i varies along the line: " + std::to_string(rep.spread));
  rep.sum = std::abs(rep.F[0] + rep.F[1] + rep.F[2]) / std::max(fmax, 1e-300);
  if (rep.sum > 1e-10) fail(ErrorKind::Incompatible, "F1 + F2 + F3 = " + std::to_string(rep.sum));

  // u_j = a_j^2 k_j with u_{i-1} - u_{i+1} = -F_i; the particular solution
  // has zero sum, t moves along (1, 1, 1).
  C3 u{0.0, -rep.F[2], rep.F[1]};
  const cplx mean = (u[0] + u[1] + u[2]) / 3.0;
  for (int j = 0; j < 3; ++j) rep.k[j] = (u[j] - mean + t) / p.a_sq[j];
  return rep;
}

HietBlochPoint solve_point_cont(const C3& b, const HietParams& p, cplx t) {
  HietBlochPoint pt{b, solve_coeffs_cont(b, p), {}, t};
  pt.k = compute_Fi_and_k_cont(b, pt.c, p, t).k;
  return pt;
}

ThetaRatio hiet_psi(const HietBlochPoint& pt, const LatticeParam& lat) {
  return {with_exponential(build_phi_h(pt.b, pt.c, lat), pt.k), hiet_delta(lat)};
}

PointFn apply_L_hiet(const HietBlochPoint& pt, const HietParams& p) {
  const ThetaRatio psi = hiet_psi(pt, p.lat);
  auto n = std::make_shared<Jet3>(psi.num);
  auto d = std::make_shared<Jet3>(psi.den);
  const C3 w = p.a_sq;
  const LatticeParam lat = p.lat;
  return [n, d, w, lat](std::span<const cplx> x) {
    const cplx dv = d->f(x);
    if (std::abs(dv) < 1e-14) fail(ErrorKind::NearPole, "denominator vanishes");
    const cplx nv = n->f(x);
    cplx lap = 0.0;
    for (int j = 0; j < 3; ++j) {
      const cplx a = n->d1[j](x), b = n->d2[j](x), c = d->d1[j](x), e = d->d2[j](x);
      lap += w[j] * (b / dv - 2.0 * a * c / (dv * dv) - nv * e / (dv * dv) + 2.0 * nv * c * c / (dv * dv * dv));
    }
    cplx u = 0.0;
    for (int i = 0; i < 3; ++i) u += 2.0 * (w[i] + w[next(i)]) * wp(x[i] - x[next(i)], lat);
    return -lap + u * nv / dv;
  };
}

HietEigen eigen_check_cont(const HietBlochPoint& pt, const HietParams& p) {
  p.validate();
  const ThetaRatio psi = hiet_psi(pt, p.lat);
  const PointFn lpsi = apply_L_hiet(pt, p);
  const auto pts = hiet_sample_points(21, p.lat, 0.05, 0x4E7A);
  std::vector<cplx> v(pts.size()), lv(pts.size());
  std::size_t ref = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    v[i] = psi(pts[i]);
    lv[i] = lpsi(pts[i]);
    if (std::abs(v[i]) > std::abs(v[ref])) ref = i;
  }
  HietEigen res;
  res.E = lv[ref] / v[ref];
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (i != ref) res.residual = std::max(res.residual, std::abs(lv[i] - res.E * v[i]) / std::abs(v[i]));
  res.samples = static_cast<int>(pts.size()) - 1;
  if (res.residual > 1e-6) fail(ErrorKind::NotEigen, "relative eigen-residual " + std::to_string(res.residual));
  return res;
}

DifferenceOperator build_D_q(const HietParams& p) {
  p.validate();
  const auto& lat = p.lat;
  const cplx w = p.omega;
  if (lattice_distance(w, lat.tau) < 1e-3) fail(ErrorKind::ResonantOmega, "omega is too close to the lattice");
  for (cplx a : p.a_sq)
    if (lattice_distance(w * a, lat.tau) < 1e-3) fail(ErrorKind::ResonantOmega, "omega a_i^2 is too close to the lattice");
  DifferenceOperator op{{}, lat, w};
  const cplx tw = theta(w, lat);
  for (int i = 0; i < 3; ++i) {
    const cplx s = w * p.a_sq[i];
    const CVec left = diff_grad(prev(i), i), right = diff_grad(i, next(i));
    ThetaTerm num{tw / theta(s, lat), {}, {odd_theta(left, s), odd_theta(right, -s)}};
    ThetaTerm den{1.0, {}, {odd_theta(left, 0.0), odd_theta(right, 0.0)}};
    CVec shift(3, 0.0);
    shift[i] = s;
    op.terms.push_back({{single_term(3, lat, std::move(num)), single_term(3, lat, std::move(den))}, std::move(shift)});
  }
  return op;
}

C3 solve_coeffs_q(const C3& b, const HietParams& p) {
  p.validate();
  check_b(b);
  const cplx w = p.omega;
  const CVec z1{w * p.a_sq[0], 0.0, -w * p.a_sq[1]}, z2{-w * p.a_sq[1], 0.0, w * p.a_sq[2]};
  std::array<C3, 2> rows;
  for (int l = 0; l < 3; ++l) {
    rows[0][l] = ansatz_term(b, l, z1, p.lat);
    rows[1][l] = ansatz_term(b, l, z2, p.lat);
  }
  return kernel_2x3(rows, "difference coefficients");
}

C3 continuum_b(const C3& b, const HietParams& p) {
  C3 out = b;
  for (int i = 0; i < 3; ++i) out[i] += 0.5 * p.omega * (p.a_sq[i] - p.a_sq[next(i)]);
  return out;
}

double kernel_angle(const C3& u, const C3& v) {
  cplx dot = 0.0;
  double nu = 0.0, nv = 0.0;
  for (int l = 0; l < 3; ++l) {
    dot += std::conj(u[l]) * v[l];
    nu += std::norm(u[l]);
    nv += std::norm(v[l]);
  }
  return std::acos(std::min(1.0, std::abs(dot) / std::sqrt(nu * nv)));
}

HietQReport solve_point_q(const C3& b, const HietParams& p, cplx t) {
  const DifferenceOperator D = build_D_q(p);
  const auto& lat = p.lat;
  const cplx w = p.omega;
  const C3& a = p.a_sq;
  HietQReport rep;
  rep.point = {b, solve_coeffs_q(b, p), {}, t};
  const C3& c = rep.point.c;
  const ThetaSum phi = build_phi_h(b, c, lat);

  // |Phi(x)| against the sum of its term magnitudes
  auto rel_zero = [&](const CVec& x) {
    double s = 0.0;
    for (int l = 0; l < 3; ++l) s += std::abs(c[l] * ansatz_term(b, l, x, lat));
    return std::abs(phi(x)) / s;
  };
  rep.qfcon = std::max(rel_zero({w * a[0], 0.0, -w * a[1]}), rel_zero({-w * a[1], 0.0, w * a[2]}));
  rep.more = std::max({rel_zero({0.0, w * a[1], -w * a[0]}), rel_zero({0.0, -w * a[0], w * a[2]}),
                       rel_zero({-w * a[2], w * a[1], 0.0}), rel_zero({w * a[0], -w * a[2], 0.0})});

  // Phi(w a_i^2 e_i) and the three right-hand sides
  C3 on_axis, th;
  for (int i = 0; i < 3; ++i) {
    CVec x(3, 0.0);
    x[i] = w * a[i];
    on_axis[i] = phi(x);
    th[i] = theta(w * a[i], lat);
    if (std::abs(on_axis[i]) < 1e-300) fail(ErrorKind::IncompatibleQscon, "Phi vanishes on an axis shift");
  }
  const cplx r1 = th[2] / th[0] * on_axis[2] / on_axis[0];
  const cplx r2 = th[0] / th[1] * on_axis[0] / on_axis[1];
  const cplx r3 = th[1] / th[2] * on_axis[1] / on_axis[2];
  rep.qscon_product = std::abs(r1 * r2 * r3 - 1.0);
  if (rep.qscon_product > 1e-10)
    fail(ErrorKind::IncompatibleQscon, "product of right-hand sides differs from 1 by " + std::to_string(rep.qscon_product));

  // u_j = w a_j^2 k_j: u1 - u3 = log r1, u2 - u1 = log r2, u1 = t
  const C3 u{t, t + std::log(r2), t - std::log(r1)};
  for (int j = 0; j < 3; ++j) rep.point.k[j] = u[j] / (w * a[j]);

  const ThetaSum phik = with_exponential(phi, rep.point.k);
  const PointFn f = [&phik](std::span<const cplx> x) { return phik(x); };

  // Vanishing identities on x_{i-1} = x_{i+1}, z = x_{i,i-1}
  std::mt19937_64 rng(0xB1A7);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  for (int i = 0; i < 3; ++i) {
    const int im = prev(i), ip = next(i);
    for (int s = 0; s < 5; ++s) {
      const cplx base = unit(rng) + unit(rng) * lat.tau, z = unit(rng) + unit(rng) * lat.tau;
      CVec x(3, base);
      x[i] = base + z;
      CVec xm = x, xp = x;
      xm[im] += w * a[im];
      xp[ip] += w * a[ip];
      const cplx t1 = theta(z + w * a[im], lat) * f(xm), t2 = theta(z + w * a[ip], lat) * f(xp);
      rep.blax = std::max(rep.blax, std::abs(t1 - t2) / (std::abs(t1) + std::abs(t2)));
    }
  }

  const auto pts = hiet_sample_points(21, lat, 0.05, 0x0D0D);
  const cplx f0 = f(pts[0]);
  rep.E = D.apply(f, pts[0]) / f0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const cplx v = f(pts[i]);
    rep.residual =
        std::max(rep.residual, std::abs(D.apply(f, pts[i]) - rep.E * v) / (D.magnitude(f, pts[i]) + std::abs(rep.E * v)));
  }
  if (rep.residual > 1e-8) fail(ErrorKind::NotEigen, "difference eigen-residual " + std::to_string(rep.residual));
  return rep;
}

std::array<cplx, 6> hiet_multipliers(const HietBlochPoint& pt, const LatticeParam& lat) {
  const ThetaRatio psi = hiet_psi(pt, lat);
  const PointFn f = [&psi](std::span<const cplx> x) { return psi(x); };
  const CVec x0 = hiet_sample_points(1, lat, 0.1, 0xF10C)[0];
  std::array<cplx, 6> out;
  for (int j = 0; j < 3; ++j) {
    CVec e(3, 0.0);
    e[j] = 1.0;
    out[j] = floquet_factor(f, e, x0).multiplier;
    e[j] = lat.tau;
    out[3 + j] = floquet_factor(f, e, x0).multiplier;
  }
  return out;
}

HietBlochPoint translate_b(const HietBlochPoint& pt, int which, const HietParams& p) {
  static constexpr std::array<std::array<double, 3>, 2> eps{{{2.0 / 3, -1.0 / 3, -1.0 / 3}, {-1.0 / 3, 2.0 / 3, -1.0 / 3}}};
  static constexpr std::array<std::array<double, 3>, 2> dk{{{1.0, -1.0, 0.0}, {0.0, 1.0, -1.0}}};
  if (which < 0 || which > 3) fail(ErrorKind::BadParams, "translation index must be 0..3");
  HietBlochPoint q = pt;
  const int e = which % 2;
  const cplx step = which < 2 ? cplx{1.0} : p.lat.tau;
  for (int i = 0; i < 3; ++i) q.b[i] += step * eps[e][i];
  if (which >= 2)
    for (int j = 0; j < 3; ++j) q.k[j] += 2.0 * pi * cplx{0.0, 1.0} * dk[e][j];
  q.c = solve_coeffs_cont(q.b, p);
  return q;
}

}  // namespace lamelab
