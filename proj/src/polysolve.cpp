#include "lamelab/polysolve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "lamelab/errors.hpp"
#include "lamelab/parallel.hpp"

namespace lamelab::poly {

namespace {

using CMat = Eigen::MatrixXcd;

// Parlett-Reinsch balancing by powers of two (similarity transform, so the
// eigenvalues are unchanged while their conditioning improves).
void balance(CMat& a) {
  const Eigen::Index n = a.rows();
  constexpr double radix = 2.0;
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double r = 0.0, c = 0.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) {
          c += std::abs(a(j, i));
          r += std::abs(a(i, j));
        }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix, f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= radix * radix;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= radix * radix;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
}

}  // namespace

cplx horner(const Poly& p, cplx x) {
  cplx s{};
  for (auto it = p.rbegin(); it != p.rend(); ++it) s = s * x + *it;
  return s;
}

Poly derivative(const Poly& p) {
  if (p.size() <= 1) return {};
  Poly d(p.size() - 1);
  for (std::size_t k = 1; k < p.size(); ++k) d[k - 1] = static_cast<double>(k) * p[k];
  return d;
}

Poly multiply(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {};
  Poly r(a.size() + b.size() - 1, cplx{});
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

Poly add(const Poly& a, const Poly& b, cplx scale) {
  Poly r(std::max(a.size(), b.size()), cplx{});
  for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) r[i] += scale * b[i];
  return r;
}

Poly power(const Poly& p, int n) {
  Poly r{1.0};
  for (int i = 0; i < n; ++i) r = multiply(r, p);
  return r;
}

Poly compose(const Poly& p, const Poly& q) {
  Poly r;
  for (auto it = p.rbegin(); it != p.rend(); ++it) r = add(multiply(r, q), Poly{*it});
  return r;
}

Poly trim(Poly p, double rel, double radius) {
  double m = 0.0;
  double rk = 1.0;
  for (cplx c : p) {
    m = std::max(m, std::abs(c) * rk);
    rk *= radius;
  }
  while (!p.empty()) {
    const double w = std::abs(p.back()) * std::pow(radius, static_cast<double>(p.size() - 1));
    if (w > rel * m) break;
    p.pop_back();
  }
  return p;
}

std::vector<cplx> roots(const Poly& p) {
  Poly q = p;
  while (!q.empty() && q.back() == cplx{}) q.pop_back();
  const int n = static_cast<int>(q.size()) - 1;
  if (n < 1) return {};

  CMat comp = CMat::Zero(n, n);
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -q[i] / q[n];
  balance(comp);

  Eigen::ComplexEigenSolver<CMat> es(comp, false);
  if (es.info() != Eigen::Success) fail(ErrorKind::NoConvergence, "companion eigenvalues");

  const Poly dq = derivative(q);
  std::vector<cplx> r(es.eigenvalues().data(), es.eigenvalues().data() + n);
  for (cplx& z : r) {
    for (int it = 0; it < 3; ++it) {
      const cplx f = horner(q, z), df = horner(dq, z);
      if (df == cplx{}) break;
      const cplx zn = z - f / df;
      if (!(std::abs(horner(q, zn)) < std::abs(f))) break;
      z = zn;
    }
  }
  return r;
}

int BiPoly::deg_x() const {
  int d = 0;
  for (const auto& p : c) d = std::max(d, static_cast<int>(p.size()) - 1);
  return d;
}

cplx BiPoly::operator()(cplx x, cplx y) const { return horner(at_x(x), y); }

Poly BiPoly::at_x(cplx x) const {
  Poly r(c.size());
  for (std::size_t j = 0; j < c.size(); ++j) r[j] = horner(c[j], x);
  return r;
}

BiPoly BiPoly::dx() const {
  BiPoly r;
  for (const auto& p : c) r.c.push_back(derivative(p));
  return r;
}

BiPoly BiPoly::dy() const {
  BiPoly r;
  for (std::size_t j = 1; j < c.size(); ++j) {
    Poly q = c[j];
    for (auto& v : q) v *= static_cast<double>(j);
    r.c.push_back(q);
  }
  if (r.c.empty()) r.c.push_back({});
  return r;
}

BiPoly outer(const Poly& px, const Poly& py) {
  BiPoly r;
  for (cplx cy : py) {
    Poly q = px;
    for (auto& v : q) v *= cy;
    r.c.push_back(q);
  }
  return r;
}

BiPoly operator+(const BiPoly& a, const BiPoly& b) {
  BiPoly r;
  r.c.resize(std::max(a.c.size(), b.c.size()));
  for (std::size_t j = 0; j < a.c.size(); ++j) r.c[j] = add(r.c[j], a.c[j]);
  for (std::size_t j = 0; j < b.c.size(); ++j) r.c[j] = add(r.c[j], b.c[j]);
  return r;
}

BiPoly operator-(const BiPoly& a, const BiPoly& b) {
  BiPoly r;
  r.c.resize(std::max(a.c.size(), b.c.size()));
  for (std::size_t j = 0; j < a.c.size(); ++j) r.c[j] = add(r.c[j], a.c[j]);
  for (std::size_t j = 0; j < b.c.size(); ++j) r.c[j] = add(r.c[j], b.c[j], -1.0);
  return r;
}

BiPoly operator*(const BiPoly& a, const BiPoly& b) {
  BiPoly r;
  if (a.c.empty() || b.c.empty()) return r;
  r.c.resize(a.c.size() + b.c.size() - 1);
  for (std::size_t i = 0; i < a.c.size(); ++i)
    for (std::size_t j = 0; j < b.c.size(); ++j) r.c[i + j] = add(r.c[i + j], multiply(a.c[i], b.c[j]));
  return r;
}

cplx sylvester_resultant(const BiPoly& f, const BiPoly& g, cplx x) {
  const Poly fy = f.at_x(x), gy = g.at_x(x);
  const int m = static_cast<int>(fy.size()) - 1, n = static_cast<int>(gy.size()) - 1;
  const int size = m + n;
  if (size == 0) return 1.0;
  CMat s = CMat::Zero(size, size);
  // rows of f shifted n times, rows of g shifted m times; descending powers
  for (int r = 0; r < n; ++r)
    for (int k = 0; k <= m; ++k) s(r, r + k) = fy[m - k];
  for (int r = 0; r < m; ++r)
    for (int k = 0; k <= n; ++k) s(n + r, r + k) = gy[n - k];
  return s.partialPivLu().determinant();
}

int resultant_degree_bound(const BiPoly& f, const BiPoly& g) {
  int df = 0, dg = 0;
  for (const auto& p : f.c) df = std::max(df, static_cast<int>(p.size()) - 1);
  for (const auto& p : g.c) dg = std::max(dg, static_cast<int>(p.size()) - 1);
  return df * g.deg_y() + dg * f.deg_y();
}

Poly eliminant(const BiPoly& f, const BiPoly& g, double radius) {
  const int n = resultant_degree_bound(f, g) + 1;
  std::vector<cplx> samples(n);
  for (int j = 0; j < n; ++j)
    samples[j] = sylvester_resultant(f, g, std::polar(radius, 2.0 * std::numbers::pi * j / n));
  Poly c(n);
  for (int k = 0; k < n; ++k) {
    cplx s{};
    for (int j = 0; j < n; ++j) s += samples[j] * std::polar(1.0, -2.0 * std::numbers::pi * j * k / n);
    c[k] = s / (static_cast<double>(n) * std::pow(radius, k));
  }
  return c;
}

Root2 newton2(const System2& sys, cplx x0, cplx y0, double tol, int max_iter) {
  Root2 r{x0, y0};
  cplx v[2], jac[2][2];
  auto resid = [&](cplx x, cplx y) {
    cplx w[2], jj[2][2];
    sys.eval(x, y, w, jj);
    const double s = sys.scale(x, y);
    return std::max(std::abs(w[0]), std::abs(w[1])) / (s > 0.0 ? s : 1.0);
  };
  r.residual = resid(r.x, r.y);
  for (int it = 0; it < max_iter && r.residual > tol; ++it) {
    sys.eval(r.x, r.y, v, jac);
    const cplx det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    if (det == cplx{} || !std::isfinite(std::abs(det))) break;
    const cplx dx = (v[0] * jac[1][1] - v[1] * jac[0][1]) / det;
    const cplx dy = (jac[0][0] * v[1] - jac[1][0] * v[0]) / det;
    double step = 1.0;
    bool moved = false;
    for (int h = 0; h < 12; ++h, step *= 0.5) {
      const cplx xn = r.x - step * dx, yn = r.y - step * dy;
      const double rn = resid(xn, yn);
      if (std::isfinite(rn) && rn < r.residual) {
        r.x = xn;
        r.y = yn;
        r.residual = rn;
        moved = true;
        break;
      }
    }
    r.iterations = it + 1;
    if (!moved) break;
  }
  r.converged = r.residual <= tol;
  return r;
}

std::vector<Root2> solve_bivariate(const BiPoly& f, const BiPoly& g, const System2& polish,
                                   const SolveOptions& opt) {
  std::vector<double> radii = opt.radii;
  if (radii.empty()) radii = {0.5, 2.0, 8.0, 32.0};

  // Candidate starting pairs from every radius, then one parallel polish.
  std::vector<std::pair<cplx, cplx>> starts;
  auto add_start_column = [&](cplx x) {
    Poly fy = trim(f.at_x(x), 1e-14);
    if (fy.size() < 2) return;
    for (cplx y : roots(fy))
      if (std::isfinite(std::abs(y)) && std::abs(y) <= opt.infinity_cut) starts.emplace_back(x, y);
  };
  if (opt.deflate_origin) add_start_column(0.0);
  for (double rad : radii) {
    Poly e = trim(eliminant(f, g, rad), 1e-15, rad);
    if (opt.deflate_origin) {
      double m = 0.0, rk = 1.0;
      for (cplx c : e) {
        m = std::max(m, std::abs(c) * rk);
        rk *= rad;
      }
      std::size_t lead = 0;
      while (lead + 1 < e.size() && std::abs(e[lead]) * std::pow(rad, static_cast<double>(lead)) <= 1e-10 * m) ++lead;
      e.erase(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(lead));
    }
    if (e.size() < 2) continue;
    for (cplx x : roots(e))
      if (std::isfinite(std::abs(x)) && std::abs(x) <= opt.infinity_cut) add_start_column(x);
  }

  std::vector<Root2> polished(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) {
    polished[i] = newton2(polish, starts[i].first, starts[i].second, opt.newton_tol);
  });

  std::vector<Root2> found;
  for (const auto& r : polished) {
    if (!r.converged || std::abs(r.x) >= opt.infinity_cut || std::abs(r.y) >= opt.infinity_cut) continue;
    bool dup = false;
    for (const auto& q : found)
      if (std::abs(q.x - r.x) + std::abs(q.y - r.y) <= opt.dedup_tol * std::max(1.0, std::abs(r.x) + std::abs(r.y))) {
        dup = true;
        break;
      }
    if (!dup) found.push_back(r);
  }
  return found;
}

}  // namespace lamelab::poly
