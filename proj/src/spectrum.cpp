#include "lamelab/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lamelab/errors.hpp"
#include "lamelab/parallel.hpp"
#include "lamelab/qb2.hpp"

namespace lamelab {

namespace {

using std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

// p^3 + 3 z' p + z'' and p^5 + 10 z' p^3 + 10 z'' p^2 + (5 z''' + 15 z'^2) p + z'''' + 10 z' z'',
// with d/da (through the coefficients), d/dp and the sum of term magnitudes.
struct Cubic {
  cplx v, da, dp;
  double mag;
};

Cubic q3(const std::vector<cplx>& z, cplx p) {
  return {p * p * p + 3.0 * z[1] * p + z[2], 3.0 * z[2] * p + z[3], 3.0 * p * p + 3.0 * z[1],
          std::pow(std::abs(p), 3) + 3.0 * std::abs(z[1] * p) + std::abs(z[2])};
}

Cubic q5(const std::vector<cplx>& z, cplx p) {
  const cplx p2 = p * p, p3 = p2 * p;
  const cplx c1 = 5.0 * z[3] + 15.0 * z[1] * z[1], c0 = z[4] + 10.0 * z[1] * z[2];
  return {p3 * p2 + 10.0 * z[1] * p3 + 10.0 * z[2] * p2 + c1 * p + c0,
          10.0 * z[2] * p3 + 10.0 * z[3] * p2 + (5.0 * z[4] + 30.0 * z[1] * z[2]) * p + z[5] + 10.0 * z[2] * z[2] +
              10.0 * z[1] * z[3],
          5.0 * p2 * p2 + 30.0 * z[1] * p2 + 20.0 * z[2] * p + c1,
          std::pow(std::abs(p), 5) + 10.0 * std::abs(z[1] * p3) + 10.0 * std::abs(z[2] * p2) + std::abs(c1 * p) +
              std::abs(c0)};
}

struct QuantEval {
  std::array<cplx, 2> F;
  cplx J[2][2];
  double rel = 0.0;
  cplx p1, p2;
};

// f = p1 Q(a2, p2) - p2 Q(a1, p1) for Q = q3, q5, with p_j = k_j + zeta(a_j).
QuantEval quant_eval(cplx k1, cplx k2, cplx a1, cplx a2, const LatticeParam& lat) {
  const auto z1 = zlog_derivatives(a1, lat, 6), z2 = zlog_derivatives(a2, lat, 6);
  QuantEval e;
  e.p1 = k1 + z1[0];
  e.p2 = k2 + z2[0];
  const cplx dp1 = z1[1], dp2 = z2[1];
  const std::array<Cubic, 2> A{q3(z1, e.p1), q5(z1, e.p1)}, B{q3(z2, e.p2), q5(z2, e.p2)};
  for (int r = 0; r < 2; ++r) {
    e.F[r] = e.p1 * B[r].v - e.p2 * A[r].v;
    e.J[r][0] = dp1 * B[r].v - e.p2 * (A[r].da + A[r].dp * dp1);
    e.J[r][1] = e.p1 * (B[r].da + B[r].dp * dp2) - dp2 * A[r].v;
    const double mag = std::abs(e.p1) * B[r].mag + std::abs(e.p2) * A[r].mag;
    e.rel = std::max(e.rel, std::abs(e.F[r]) / std::max(mag, 1e-300));
  }
  return e;
}

struct NewtonResult {
  cplx a1, a2;
  double rel = 1.0;
  bool ok = false;
};

// Damped Newton: full steps while the relative residual drops, otherwise
// halved (at most 20 times); 50 iterations.
NewtonResult newton(cplx k1, cplx k2, cplx a1, cplx a2, const LatticeParam& lat) {
  NewtonResult r{a1, a2};
  const double box = 0.75 * lat.tau.imag() + 1.0;
  auto bad = [&](cplx x) {
    return lattice_distance(x, lat.tau) < 1e-4 || std::abs(x.imag()) > box || !std::isfinite(std::abs(x));
  };
  try {
    QuantEval e = quant_eval(k1, k2, r.a1, r.a2, lat);
    for (int it = 0; it < 50; ++it) {
      r.rel = e.rel;
      if (e.rel < 1e-14) break;
      const cplx det = e.J[0][0] * e.J[1][1] - e.J[0][1] * e.J[1][0];
      if (std::abs(det) == 0.0) return r;
      const cplx d1 = (e.J[1][1] * e.F[0] - e.J[0][1] * e.F[1]) / det;
      const cplx d2 = (e.J[0][0] * e.F[1] - e.J[1][0] * e.F[0]) / det;
      double s = 1.0;
      bool moved = false;
      for (int h = 0; h < 20; ++h, s *= 0.5) {
        const cplx n1 = r.a1 - s * d1, n2 = r.a2 - s * d2;
        if (bad(n1) || bad(n2)) continue;
        const QuantEval en = quant_eval(k1, k2, n1, n2, lat);
        if (en.rel < e.rel) {
          r.a1 = n1;
          r.a2 = n2;
          e = en;
          moved = true;
          break;
        }
      }
      if (!moved) break;
      r.rel = e.rel;
    }
    // Trivial points p1 = p2 = 0 satisfy both equations for any coefficients.
    r.ok = r.rel < 1e-12 && std::abs(e.p1) + std::abs(e.p2) > 1e-3;
  } catch (const Error&) {
    r.ok = false;
  }
  return r;
}

// Re a into [-1/2, 1/2); false when a lies outside the strip |Im a| <= Im tau / 2.
bool reduce(cplx& a, const LatticeParam& lat) {
  const double t = a.imag() / lat.tau.imag();
  if (std::abs(t) > 0.5 + 1e-9) return false;
  const double re = a.real() - t * lat.tau.real();
  a -= std::floor(re + 0.5);
  return true;
}

double mod1_distance(cplx a, cplx b) {
  const cplx d = a - b;
  const double re = d.real() - std::round(d.real());
  return std::hypot(re, d.imag());
}

void check_label_and_tau(const SpectrumLabel& label, const LatticeParam& lat) {
  label.validate();
  lat.validate();
  if (std::abs(lat.tau.real()) > 1e-14) fail(ErrorKind::BadParams, "the spectrum requires pure imaginary tau");
}

cplx k_of(int m) { return kI * pi * static_cast<double>(m); }

bool less_point(const SpectralPoint& x, const SpectralPoint& y) {
  const std::array<double, 4> u{x.a1.real(), x.a1.imag(), x.a2.real(), x.a2.imag()};
  const std::array<double, 4> v{y.a1.real(), y.a1.imag(), y.a2.real(), y.a2.imag()};
  for (int i = 0; i < 4; ++i)
    if (std::abs(u[i] - v[i]) > 1e-9) return u[i] < v[i];
  return false;
}

std::optional<SpectralPoint> polish(const SpectrumLabel& label, cplx a1, cplx a2, const LatticeParam& lat) {
  const NewtonResult r = newton(k_of(label.m), k_of(label.n), a1, a2, lat);
  if (!r.ok) return std::nullopt;
  SpectralPoint pt{label, r.a1, r.a2, k_of(label.m), k_of(label.n), r.rel};
  if (!reduce(pt.a1, lat) || !reduce(pt.a2, lat)) return std::nullopt;
  return pt;
}

std::vector<SpectralPoint> dedup_sorted(std::vector<std::optional<SpectralPoint>> found) {
  std::vector<SpectralPoint> out;
  for (auto& f : found) {
    if (!f) continue;
    // a1 = +-a2 lies on the vertical component, not on the spectral sheets.
    if (mod1_distance(f->a1, f->a2) < 1e-4 || mod1_distance(f->a1, -f->a2) < 1e-4) continue;
    const bool seen = std::any_of(out.begin(), out.end(), [&](const SpectralPoint& q) {
      return mod1_distance(q.a1, f->a1) + mod1_distance(q.a2, f->a2) < 1e-8;
    });
    if (!seen) out.push_back(*f);
  }
  std::sort(out.begin(), out.end(), less_point);
  return out;
}

}  // namespace

void SpectrumLabel::validate() const {
  if ((m - n) % 2 != 0) fail(ErrorKind::BadParams, "m and n must have the same parity");
}

bool SpectrumLabel::admissible() const { return (m - n) % 2 == 0 && n - 4 >= m && m >= 2; }

bool admissible_by_weights(const SpectrumLabel& label) {
  if ((label.m - label.n) % 2 != 0) return false;
  // (m, n) = 2 (lambda + rho), rho = (1, 3); lambda dominant: 0 <= l1 <= l2,
  // with 2 lambda in Z^2 of equal parity (the weight lattice).
  const int l1 = label.m - 2, l2 = label.n - 6;
  return l1 >= 0 && l2 >= l1 && (l1 - l2) % 2 == 0;
}

std::array<cplx, 2> quantized_residual(const SpectrumLabel& label, cplx a1, cplx a2, const LatticeParam& lat) {
  return quant_eval(k_of(label.m), k_of(label.n), a1, a2, lat).F;
}

double quantized_relative_residual(const SpectrumLabel& label, cplx a1, cplx a2, const LatticeParam& lat) {
  return quant_eval(k_of(label.m), k_of(label.n), a1, a2, lat).rel;
}

std::vector<SpectralPoint> quantize_solve_all(const SpectrumLabel& label, const LatticeParam& lat, int grid) {
  check_label_and_tau(label, lat);
  if (grid < 1) fail(ErrorKind::BadParams, "grid must be positive");
  std::vector<cplx> nodes;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j)
      nodes.push_back((i + 0.5) / grid - 0.5 + ((j + 0.5) / grid - 0.5) * lat.tau);
  const std::size_t n = nodes.size();
  std::vector<std::optional<SpectralPoint>> found(n * n);
  parallel_for(n * n, [&](std::size_t s) { found[s] = polish(label, nodes[s / n], nodes[s % n], lat); });
  return dedup_sorted(std::move(found));
}

SpectralPoint quantize_solve(const SpectrumLabel& label, const LatticeParam& lat,
                             std::optional<std::array<cplx, 2>> initial_a) {
  check_label_and_tau(label, lat);
  if (initial_a) {
    if (auto pt = polish(label, (*initial_a)[0], (*initial_a)[1], lat)) return *pt;
    fail(ErrorKind::NoConvergence, "Newton did not converge from the given start");
  }

  // Continue from tau + 2i, where the solution is unique, keeping Im a / Im tau.
  const LatticeParam far = make_lattice(lat.tau + 2.0 * kI, lat.series_tol, lat.max_terms);
  for (const SpectralPoint& start : quantize_solve_all(label, far)) {
    std::optional<SpectralPoint> cur = start;
    double prev_im = far.tau.imag();
    for (int step = 1; step <= 4 && cur; ++step) {
      const LatticeParam here = make_lattice(far.tau - 0.5 * step * kI, lat.series_tol, lat.max_terms);
      const double r = here.tau.imag() / prev_im;
      cur = polish(label, cplx{cur->a1.real(), cur->a1.imag() * r}, cplx{cur->a2.real(), cur->a2.imag() * r}, here);
      prev_im = here.tau.imag();
    }
    if (cur) return *cur;
  }
  const auto all = quantize_solve_all(label, lat);
  if (all.empty()) fail(ErrorKind::NoConvergence, "no start converged");
  return all.front();
}

SpectralPoint wall_point(const SpectrumLabel& label, const LatticeParam& lat, cplx a_free) {
  check_label_and_tau(label, lat);
  if (label.m != 0 && label.n != 0) fail(ErrorKind::BadParams, "wall points need a zero label component");
  SpectralPoint pt{label, label.m == 0 ? cplx{0.5} : a_free, label.m == 0 ? a_free : cplx{0.5}, k_of(label.m),
                   k_of(label.n), 0.0};
  // Every term carrying p_j vanishes, so the relative measure is 0 / 0 here.
  const auto F = quantized_residual(label, pt.a1, pt.a2, lat);
  pt.residual = std::max(std::abs(F[0]), std::abs(F[1]));
  return pt;
}

ThetaRatio symmetrize(const SpectralPoint& pt, const LatticeParam& lat) {
  const ThetaSum phi = build_phi(pt.bloch(lat));
  ThetaSum num(2, lat);
  for (const auto& w : b2_weyl_group())
    num = num + static_cast<double>(w.det) * substitute_linear(phi, w.m);
  return {num, b2_delta(lat)};
}

PointFn symmetrize_signed(const SpectralPoint& pt, const LatticeParam& lat) {
  auto psi = std::make_shared<ThetaRatio>(ThetaRatio{build_phi(pt.bloch(lat)), b2_delta(lat)});
  return [psi](std::span<const cplx> x) {
    static constexpr std::array<std::array<double, 2>, 4> positive{{{1, 0}, {0, 1}, {1, 1}, {-1, 1}}};
    cplx s = 0.0;
    for (const auto& w : b2_weyl_group()) {
      // eps(w) = (-1)^(number of positive roots sent to negative ones), all multiplicities 1
      int flips = 0;
      for (const auto& r : positive) {
        const double u = w.m[0] * r[0] + w.m[1] * r[1], v = w.m[2] * r[0] + w.m[3] * r[1];
        const bool pos = std::any_of(positive.begin(), positive.end(),
                                     [&](const auto& q) { return std::abs(q[0] - u) + std::abs(q[1] - v) < 0.5; });
        if (!pos) ++flips;
      }
      const double eps = flips % 2 == 0 ? 1.0 : -1.0;
      const CVec wx{w.m[0] * x[0] + w.m[1] * x[1], w.m[2] * x[0] + w.m[3] * x[1]};
      s += eps * static_cast<double>(w.det) * (*psi)(wx);
    }
    return s;
  };
}

std::vector<CVec> real_grid(int n) {
  std::vector<CVec> pts;
  pts.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) pts.push_back({(i + 0.5) / n, (j + 0.27) / n});
  return pts;
}

RegularityReport regularity_check(const ThetaRatio& Psi, const LatticeParam& lat) {
  RegularityReport rep;
  struct Line {
    std::array<double, 2> base, normal;
  };
  const double h = std::numbers::sqrt2 / 2.0;
  const std::array<Line, 4> lines{{{{0.0, 0.37}, {1.0, 0.0}},
                                   {{0.29, 0.0}, {0.0, 1.0}},
                                   {{0.31, -0.31}, {h, h}},
                                   {{0.23, 0.23}, {h, -h}}}};
  constexpr int kFit = 10;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < kFit; ++i) {
      const double t = std::pow(10.0, -3.0 + static_cast<double>(i) / (kFit - 1));
      const CVec x{lines[l].base[0] + t * lines[l].normal[0], lines[l].base[1] + t * lines[l].normal[1]};
      const double lx = std::log(t), ly = std::log(std::abs(Psi(x)));
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    rep.gamma[l] = (kFit * sxy - sx * sy) / (kFit * sxx - sx * sx);
  }

  const auto grid = real_grid(50);
  std::vector<cplx> vals(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { vals[i] = Psi(grid[i]); });
  for (cplx v : vals) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) rep.finite = false;
    rep.grid_max = std::max(rep.grid_max, std::abs(v));
  }

  const double scale = std::max(rep.grid_max, 1e-300);
  for (std::size_t i = 0; i < grid.size(); i += 97) {
    const auto& x = grid[i];
    const cplx v = vals[i];
    for (const auto& w : b2_weyl_group()) {
      const CVec wx{w.m[0] * x[0] + w.m[1] * x[1], w.m[2] * x[0] + w.m[3] * x[1]};
      rep.weyl_symmetry = std::max(rep.weyl_symmetry, std::abs(Psi(wx) - v) / scale);
    }
    const cplx s = x[0] + x[1] - 1.0, d = x[0] - x[1] - 1.0;
    for (const CVec& y : {CVec{2.0 - x[0], x[1]}, CVec{x[0], 2.0 - x[1]}, CVec{x[0] - s, x[1] - s},
                          CVec{x[0] - d, x[1] + d}})
      rep.line_reflection = std::max(rep.line_reflection, std::abs(Psi(y) - v) / scale);
  }
  (void)lat;

  for (double g : rep.gamma)
    if (g < 0.0) fail(ErrorKind::SingularOnLine, "symmetrized function grows towards a singular line");
  return rep;
}

SpectrumEigen spectrum_eigen_check(const SpectralPoint& pt, const LatticeParam& lat) {
  SpectrumEigen res;
  res.E = eigen_check(pt.bloch(lat)).E;
  const ThetaRatio Psi = symmetrize(pt, lat);
  const PointFn lpsi = apply_L(Psi);
  const auto grid = real_grid(20);
  std::vector<double> diff(grid.size()), mag(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const cplx v = Psi(grid[i]);
    diff[i] = std::abs(lpsi(grid[i]) - res.E * v);
    mag[i] = std::abs(v);
  });
  const double scale = std::max(1.0, std::abs(res.E)) * *std::max_element(mag.begin(), mag.end());
  res.residual = *std::max_element(diff.begin(), diff.end()) / std::max(scale, 1e-300);
  return res;
}

double symmetrized_norm_ratio(const SpectralPoint& pt, const LatticeParam& lat) {
  const ThetaRatio Psi = symmetrize(pt, lat);
  const ThetaRatio psi{build_phi(pt.bloch(lat)), b2_delta(lat)};
  double num = 0.0, den = 0.0;
  for (const auto& x : real_grid(20)) {
    num += std::norm(Psi(x));
    den += std::norm(psi(x));
  }
  return std::sqrt(num / den);
}

}  // namespace lamelab
