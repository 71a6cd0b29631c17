#include "lamelab/quasiinv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "lamelab/errors.hpp"

namespace lamelab {

namespace {

constexpr double kCircleRadius = 1e-2;
constexpr double kCoeffTol = 1e-7;
// Base points must keep the sampling circle well inside the domain of
// analyticity of g, otherwise aliasing dominates the coefficient estimate.
constexpr double kClearance = 0.1;
constexpr int kRetries = 8;

CVec unit(int dim, int i, cplx c = 1.0) {
  CVec v(dim, cplx{});
  v[i] = c;
  return v;
}

CVec combo(int dim, std::initializer_list<std::pair<int, cplx>> parts) {
  CVec v(dim, cplx{});
  for (auto [i, c] : parts) v[i] += c;
  return v;
}

}  // namespace

cplx bilinear(std::span<const cplx> a, std::span<const cplx> b) {
  cplx s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void PotentialSpec::validate() const {
  lat.validate();
  for (const auto& t : terms) {
    if (static_cast<int>(t.alpha.grad.size()) != dim)
      fail(ErrorKind::DimensionMismatch, "covector dimension for " + t.label);
    if (t.m < 1) fail(ErrorKind::BadParams, "multiplicity must be positive for " + t.label);
    if (std::abs(bilinear(t.alpha.grad, t.alpha.grad)) <= 1e-12)
      fail(ErrorKind::BadParams, "isotropic covector " + t.label);
  }
}

cplx PotentialSpec::coefficient(std::size_t i) const {
  const auto& t = terms.at(i);
  if (t.coeff) return *t.coeff;
  return static_cast<double>(t.m) * (t.m + 1) * bilinear(t.alpha.grad, t.alpha.grad);
}

cplx potential_eval(const PotentialSpec& spec, std::span<const cplx> x) {
  if (static_cast<int>(x.size()) != spec.dim) fail(ErrorKind::DimensionMismatch, "point dimension");
  cplx u{};
  for (std::size_t i = 0; i < spec.terms.size(); ++i) {
    const cplx z = spec.terms[i].alpha(x);
    if (lattice_distance(z, spec.lat.tau) < 1e-6) fail(ErrorKind::NearPole, "point on a singular hyperplane");
    u += spec.coefficient(i) * wp(z, spec.lat);
  }
  return u;
}

QuasiInvReport quasi_invariance_check(const PotentialSpec& spec, const HyperplaneId& h) {
  spec.validate();
  if (h.term_index < 0 || h.term_index >= static_cast<int>(spec.terms.size()))
    fail(ErrorKind::BadParams, "hyperplane term index out of range");

  const auto& term = spec.terms[h.term_index];
  const CVec& a0 = term.alpha.grad;
  const cplx level = static_cast<double>(h.m) + static_cast<double>(h.n) * spec.lat.tau;
  const cplx q = bilinear(a0, a0);
  const cplx sq = std::sqrt(q);

  QuasiInvReport rep;
  rep.plane = h;

  const cplx ratio = spec.coefficient(h.term_index) / q;
  const double expect = static_cast<double>(term.m) * (term.m + 1);
  if (std::abs(ratio - expect) > 1e-9 * std::max(1.0, expect)) {
    rep.residue_ok = false;
    rep.note = "residue-order mismatch: c/(alpha0,alpha0) != m(m+1)";
  }

  // Generic base point on the hyperplane.
  std::mt19937_64 rng(0x5EED);
  std::uniform_real_distribution<double> ure(-0.5, 0.5), uim(-0.25, 0.25);
  CVec x0;
  bool found = false;
  for (int attempt = 0; attempt <= kRetries && !found; ++attempt) {
    CVec y(spec.dim);
    for (auto& c : y) c = {ure(rng), uim(rng) * spec.lat.tau.imag()};
    const cplx excess = (term.alpha(y) - level) / q;
    x0 = y;
    for (int i = 0; i < spec.dim; ++i) x0[i] -= excess * a0[i];
    found = true;
    for (std::size_t j = 0; j < spec.terms.size(); ++j) {
      if (static_cast<int>(j) == h.term_index) continue;
      const auto& other = spec.terms[j];
      // distance along the sampling line x0 + t n to the other term's poles
      const double rate = std::abs(bilinear(other.alpha.grad, a0) / sq);
      if (rate < 1e-14) continue;
      const double d = lattice_distance(other.alpha(x0), spec.lat.tau) / rate;
      if (d < kClearance) {
        found = false;
        break;
      }
    }
  }
  if (!found) fail(ErrorKind::DegenerateSample, "no base point clear of other hyperplanes");
  rep.base_point = x0;

  // Regular part: the term singular on this hyperplane cancels identically
  // in u(x) - u(s x) because wp is even and periodic.
  auto u_reg = [&](std::span<const cplx> x) {
    cplx u{};
    for (std::size_t j = 0; j < spec.terms.size(); ++j)
      if (static_cast<int>(j) != h.term_index) u += spec.coefficient(j) * wp(spec.terms[j].alpha(x), spec.lat);
    return u;
  };

  const int m = term.m;
  const int npts = 4 * m + 4;
  std::vector<cplx> g(npts);
  CVec xp(spec.dim), xm(spec.dim);
  for (int k = 0; k < npts; ++k) {
    const cplx t = std::polar(kCircleRadius, 2.0 * std::numbers::pi * k / npts);
    for (int i = 0; i < spec.dim; ++i) {
      const cplx step = t * a0[i] / sq;
      xp[i] = x0[i] + step;
      xm[i] = x0[i] - step;
    }
    g[k] = u_reg(xp) - u_reg(xm);
  }
  const double scale = std::max(1.0, std::abs(u_reg(x0)));
  for (int j = 0; j <= 2 * m; ++j) {
    cplx s{};
    for (int k = 0; k < npts; ++k) s += g[k] * std::polar(1.0, -2.0 * std::numbers::pi * j * k / npts);
    s /= static_cast<double>(npts);
    rep.coeffs.push_back(s / std::pow(kCircleRadius, j));
    rep.worst = std::max(rep.worst, std::abs(s) / scale);
  }
  rep.pass = rep.residue_ok && rep.worst <= kCoeffTol;
  if (rep.residue_ok && !rep.pass) rep.note = "low-order coefficients of u(x)-u(s x) do not vanish";
  return rep;
}

std::vector<QuasiInvReport> quasi_invariance_all(const PotentialSpec& spec,
                                                 const std::vector<std::pair<int, int>>& shifts) {
  std::vector<QuasiInvReport> out;
  for (int i = 0; i < static_cast<int>(spec.terms.size()); ++i)
    for (auto [m, n] : shifts) out.push_back(quasi_invariance_check(spec, {i, m, n}));
  return out;
}

std::string_view to_string(Catalog c) {
  switch (c) {
    case Catalog::A: return "A";
    case Catalog::B2_CM: return "B2_CM";
    case Catalog::BC: return "BC";
    case Catalog::G2: return "G2";
    case Catalog::A_n1: return "A_n1";
    case Catalog::C_n1: return "C_n1";
    case Catalog::BC_n1: return "BC_n1";
    case Catalog::Hietarinta: return "Hietarinta";
    case Catalog::A_n2: return "A_n2";
  }
  return "?";
}

Catalog catalog_from_string(std::string_view name) {
  for (Catalog c : {Catalog::A, Catalog::B2_CM, Catalog::BC, Catalog::G2, Catalog::A_n1, Catalog::C_n1,
                    Catalog::BC_n1, Catalog::Hietarinta, Catalog::A_n2})
    if (to_string(c) == name) return c;
  fail(ErrorKind::Validation, "unknown catalog name " + std::string(name));
}

PotentialSpec builtin(Catalog name, const CatalogParams& p, const LatticeParam& lat) {
  PotentialSpec s;
  s.lat = lat;
  auto add = [&](CVec grad, cplx offset, int m, std::string label) {
    if (m <= 0) return;  // multiplicity zero: term absent
    s.terms.push_back({AffineForm{std::move(grad), offset}, m, std::nullopt, std::move(label)});
  };
  auto name_ij = [](const char* fmt, int i, int j) {
    std::string r = fmt;
    r.replace(r.find('i'), 1, std::to_string(i + 1));
    if (auto pos = r.find('j'); pos != std::string::npos) r.replace(pos, 1, std::to_string(j + 1));
    return r;
  };
  const int n = p.n;

  switch (name) {
    case Catalog::A: {
      if (n < 2 || p.m < 1) fail(ErrorKind::BadParams, "A needs n >= 2, m >= 1");
      s.dim = n;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) add(combo(n, {{i, 1.0}, {j, -1.0}}), 0.0, p.m, name_ij("xi-xj", i, j));
      break;
    }
    case Catalog::B2_CM: {
      s.dim = 2;
      add(unit(2, 0), 0.0, 1, "x1");
      add(unit(2, 1), 0.0, 1, "x2");
      add(combo(2, {{0, 1.0}, {1, -1.0}}), 0.0, 1, "x1-x2");
      add(combo(2, {{0, 1.0}, {1, 1.0}}), 0.0, 1, "x1+x2");
      break;
    }
    case Catalog::BC: {
      if (n < 1 || p.m < 0) fail(ErrorKind::BadParams, "BC needs n >= 1, m >= 0");
      s.dim = n;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          add(combo(n, {{i, 1.0}, {j, -1.0}}), 0.0, p.m, name_ij("xi-xj", i, j));
          add(combo(n, {{i, 1.0}, {j, 1.0}}), 0.0, p.m, name_ij("xi+xj", i, j));
        }
      for (int i = 0; i < n; ++i)
        for (int sidx = 0; sidx < 4; ++sidx) {
          if (p.g[sidx] < 0) fail(ErrorKind::BadParams, "BC couplings must be non-negative");
          add(unit(n, i), half_period(sidx, lat.tau), p.g[sidx],
              name_ij("xi", i, 0) + "+w" + std::to_string(sidx));
        }
      break;
    }
    case Catalog::G2: {
      if (p.m_short < 1 || p.m_long < 1) fail(ErrorKind::BadParams, "G2 multiplicities must be positive");
      s.dim = 3;
      add(combo(3, {{0, 1.0}, {1, -1.0}}), 0.0, p.m_short, "x1-x2");
      add(combo(3, {{1, 1.0}, {2, -1.0}}), 0.0, p.m_short, "x2-x3");
      add(combo(3, {{0, 1.0}, {2, -1.0}}), 0.0, p.m_short, "x1-x3");
      add(combo(3, {{0, 2.0}, {1, -1.0}, {2, -1.0}}), 0.0, p.m_long, "2x1-x2-x3");
      add(combo(3, {{1, 2.0}, {0, -1.0}, {2, -1.0}}), 0.0, p.m_long, "2x2-x1-x3");
      add(combo(3, {{2, 2.0}, {0, -1.0}, {1, -1.0}}), 0.0, p.m_long, "2x3-x1-x2");
      break;
    }
    case Catalog::A_n1: {
      if (n < 1) fail(ErrorKind::BadParams, "A_n1 needs n >= 1");
      if (p.m == 0 || p.m == -1) fail(ErrorKind::BadParams, "A_n1 needs m != 0, -1");
      s.dim = n + 1;
      const cplx sm = std::sqrt(cplx(p.m, 0));
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          add(combo(n + 1, {{i, 1.0}, {j, -1.0}}), 0.0, bracket_mult(p.m), name_ij("xi-xj", i, j));
      for (int i = 0; i < n; ++i) add(combo(n + 1, {{i, 1.0}, {n, -sm}}), 0.0, 1, name_ij("xi-sqrt(m)x*", i, 0));
      break;
    }
    case Catalog::C_n1:
    case Catalog::BC_n1: {
      if (n < 1) fail(ErrorKind::BadParams, "deformed C/BC needs n >= 1");
      const bool bc = name == Catalog::BC_n1;
      std::array<int, 4> ms = bc ? p.ms : std::array<int, 4>{p.m, p.m, p.m, p.m};
      std::array<int, 4> ls = bc ? p.ls : std::array<int, 4>{p.l, p.l, p.l, p.l};
      const int kn = 2 * ms[0] + 1, kd = 2 * ls[0] + 1;
      for (int sidx = 0; sidx < 4; ++sidx)
        if (static_cast<long>(2 * ms[sidx] + 1) * kd != static_cast<long>(kn) * (2 * ls[sidx] + 1))
          fail(ErrorKind::BadParams, "k = (2m_s+1)/(2l_s+1) must agree for all s");
      const double k = static_cast<double>(kn) / kd;
      if (n >= 2 && kn % kd != 0) fail(ErrorKind::BadParams, "k must be an integer when n >= 2");
      const cplx sk = std::sqrt(cplx(k, 0));
      s.dim = n + 1;
      if (n >= 2) {
        const int mk = bracket_mult(kn / kd);
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j) {
            add(combo(n + 1, {{i, 1.0}, {j, -1.0}}), 0.0, mk, name_ij("xi-xj", i, j));
            add(combo(n + 1, {{i, 1.0}, {j, 1.0}}), 0.0, mk, name_ij("xi+xj", i, j));
          }
      }
      for (int i = 0; i < n; ++i) {
        if (bc) {
          for (int sidx = 0; sidx < 4; ++sidx)
            add(unit(n + 1, i), half_period(sidx, lat.tau), bracket_mult(ms[sidx]),
                name_ij("xi", i, 0) + "+w" + std::to_string(sidx));
        } else {
          add(unit(n + 1, i, 2.0), 0.0, bracket_mult(p.m), name_ij("2xi", i, 0));
        }
        add(combo(n + 1, {{i, 1.0}, {n, sk}}), 0.0, 1, name_ij("xi+sqrt(k)x*", i, 0));
        add(combo(n + 1, {{i, 1.0}, {n, -sk}}), 0.0, 1, name_ij("xi-sqrt(k)x*", i, 0));
      }
      if (bc) {
        for (int sidx = 0; sidx < 4; ++sidx)
          add(unit(n + 1, n, sk), half_period(sidx, lat.tau), bracket_mult(ls[sidx]),
              "sqrt(k)x*+w" + std::to_string(sidx));
      } else {
        add(unit(n + 1, n, 2.0 * sk), 0.0, bracket_mult(p.l), "2sqrt(k)x*");
      }
      break;
    }
    case Catalog::Hietarinta: {
      const auto& a2 = p.asq;
      if (std::abs(a2[0] + a2[1] + a2[2]) > 1e-14 * std::max({1.0, std::abs(a2[0]), std::abs(a2[1])}))
        fail(ErrorKind::BadParams, "a1^2 + a2^2 + a3^2 must vanish");
      for (cplx c : a2)
        if (std::abs(c) < 1e-12) fail(ErrorKind::BadParams, "a_i must be nonzero");
      const cplx a1 = std::sqrt(a2[0]), b = std::sqrt(a2[1]), c = std::sqrt(a2[2]);
      s.dim = 3;
      add(combo(3, {{0, a1}, {1, -b}}), 0.0, 1, "a1x1-a2x2");
      add(combo(3, {{1, b}, {2, -c}}), 0.0, 1, "a2x2-a3x3");
      add(combo(3, {{0, a1}, {2, -c}}), 0.0, 1, "a1x1-a3x3");
      break;
    }
    case Catalog::A_n2: {
      if (n < 1 || p.m < 1) fail(ErrorKind::BadParams, "A_n2 needs n >= 1, m >= 1");
      s.dim = n + 2;
      const cplx sm = std::sqrt(cplx(p.m, 0)), sm1 = std::sqrt(cplx(-1.0 - p.m, 0));
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) add(combo(n + 2, {{i, 1.0}, {j, -1.0}}), 0.0, p.m, name_ij("xi-xj", i, j));
      for (int i = 0; i < n; ++i) {
        add(combo(n + 2, {{i, 1.0}, {n, -sm}}), 0.0, 1, name_ij("xi-sqrt(m)y", i, 0));
        add(combo(n + 2, {{i, 1.0}, {n + 1, -sm1}}), 0.0, 1, name_ij("xi-sqrt(-1-m)z", i, 0));
      }
      add(combo(n + 2, {{n, sm}, {n + 1, -sm1}}), 0.0, 1, "sqrt(m)y-sqrt(-1-m)z");
      break;
    }
  }
  s.validate();
  return s;
}

std::vector<cplx> locus_residual(std::span<const cplx> poles, std::span<const int> mults,
                                 const LatticeParam& lat) {
  const std::size_t n = poles.size();
  if (mults.size() != n) fail(ErrorKind::DimensionMismatch, "poles and multiplicities differ in length");
  for (std::size_t i = 0; i < n; ++i) {
    if (mults[i] < 1 || 2 * mults[i] > kMaxThetaOrder - 2)
      fail(ErrorKind::BadParams, "multiplicity out of supported range");
    for (std::size_t j = i + 1; j < n; ++j)
      if (lattice_distance(poles[i] - poles[j], lat.tau) < 1e-8)
        fail(ErrorKind::CoincidentPoles, "poles coincide modulo the lattice");
  }
  std::vector<cplx> r;
  for (std::size_t i = 0; i < n; ++i)
    for (int s = 1; s <= mults[i]; ++s) {
      cplx acc{};
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) acc += static_cast<double>(mults[j]) * (mults[j] + 1) * wp(poles[i] - poles[j], lat, 2 * s - 1);
      r.push_back(acc);
    }
  return r;
}

LocusResult locus_solve(std::span<const cplx> initial, std::span<const int> mults, const LatticeParam& lat) {
  LocusResult res;
  res.poles.assign(initial.begin(), initial.end());
  const std::size_t n = res.poles.size();
  if (n == 0) return res;
  for (std::size_t i = 1; i < n; ++i) res.poles[i] -= res.poles[0];
  res.poles[0] = 0.0;

  auto norm_inf = [](const std::vector<cplx>& v) {
    double m = 0.0;
    for (cplx c : v) m = std::max(m, std::abs(c));
    return m;
  };
  std::vector<cplx> r = locus_residual(res.poles, mults, lat);
  res.residual = norm_inf(r);
  if (n == 1) return res;

  for (int it = 0; it < 50 && res.residual > 1e-11; ++it) {
    // Jacobian with respect to poles 1..n-1.
    Eigen::MatrixXcd jac = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(n - 1));
    Eigen::VectorXcd rv(static_cast<Eigen::Index>(r.size()));
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (int s = 1; s <= mults[i]; ++s, ++row) {
        rv(row) = r[row];
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          const cplx d = static_cast<double>(mults[j]) * (mults[j] + 1) * wp(res.poles[i] - res.poles[j], lat, 2 * s);
          if (i > 0) jac(row, static_cast<Eigen::Index>(i - 1)) += d;
          if (j > 0) jac(row, static_cast<Eigen::Index>(j - 1)) -= d;
        }
      }
    const Eigen::VectorXcd step = jac.completeOrthogonalDecomposition().solve(rv);
    double damp = 1.0;
    bool moved = false;
    for (int h = 0; h < 20; ++h, damp *= 0.5) {
      std::vector<cplx> trial = res.poles;
      for (std::size_t i = 1; i < n; ++i) trial[i] -= damp * step(static_cast<Eigen::Index>(i - 1));
      try {
        auto rt = locus_residual(trial, mults, lat);
        if (norm_inf(rt) < res.residual) {
          res.poles = trial;
          r = rt;
          res.residual = norm_inf(rt);
          moved = true;
          break;
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::CoincidentPoles && e.kind() != ErrorKind::NearPole) throw;
      }
    }
    res.iterations = it + 1;
    if (!moved) break;
  }
  if (res.residual > 1e-11) fail(ErrorKind::NoConvergence, "locus Newton did not converge");
  return res;
}

}  // namespace lamelab
