#include "lamelab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <utility>

#include <CLI11.hpp>

#include "lamelab/b2cm.hpp"
#include "lamelab/hietarinta.hpp"
#include "lamelab/parallel.hpp"
#include "lamelab/qb2.hpp"
#include "lamelab/quasiinv.hpp"
#include "lamelab/spectrum.hpp"
#include "lamelab/theta_kernels.hpp"

namespace lamelab {

using nlohmann::json;

namespace {

const std::vector<std::pair<std::string, std::string>> kCommands{
    {"theta", "theta function and its derivatives"},
    {"wp", "Weierstrass zeta, wp and wp'"},
    {"quasiinv-check", "quasi-invariance of a catalog potential on its singular hyperplanes"},
    {"locus-solve", "solve the locus equations for elliptic poles with multiplicities"},
    {"b2-variety", "Hermite-Bloch variety of the elliptic B2 operator"},
    {"b2-eigen", "eigen-residual and Floquet factors of a B2 Bloch solution"},
    {"qb2-variety", "Hermite-Bloch variety of the difference B2 operator"},
    {"qb2-eigen", "eigen-residuals of a difference B2 Bloch solution"},
    {"qb2-limit", "small-omega limit of the difference variety"},
    {"hiet-eigen", "Hietarinta system, continuous case"},
    {"hietq-eigen", "Hietarinta system, difference case"},
    {"spectrum", "quantized B2 point for a label, with a CSV grid of Psi"},
    {"verify-file", "re-run a result file and compare its residuals"}};

[[noreturn]] void invalid(const std::string& what) { fail(ErrorKind::Validation, what); }

json cvec_json(const CVec& v) {
  json a = json::array();
  for (cplx z : v) a.push_back(cplx_json(z));
  return a;
}

template <std::size_t N>
json carr_json(const std::array<cplx, N>& v) {
  return cvec_json(CVec(v.begin(), v.end()));
}

CVec cvec_from(const json& j) {
  CVec v;
  for (const auto& e : j) v.push_back(cplx_from_json(e));
  return v;
}

C3 c3(const CVec& v) { return {v.at(0), v.at(1), v.at(2)}; }

double tol(const RunConfig& c, const std::string& key) { return c.tolerances.at(key); }

LatticeParam lattice(const RunConfig& c) {
  LatticeParam lat = make_lattice(c.tau);
  lat.validate();
  return lat;
}

// The generic default a used when none is given.
std::array<cplx, 2> a_or_default(const RunConfig& c) {
  if (c.a.empty()) return {cplx{0.23, 0.11}, cplx{0.37, -0.08}};
  return {c.a[0], c.a[1]};
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(2);
  os << std::scientific << x;
  return os.str();
}

// ---------------------------------------------------------------- commands

RunResult cmd_theta(const RunConfig& c) {
  const LatticeParam lat = lattice(c);
  std::vector<cplx> d(c.order + 1);
  theta_derivatives(c.z, lat, kOddTheta, 1, c.order, d);
  return {0, {{"derivatives", cvec_json(d)}}, "theta: " + std::to_string(c.order + 1) + " derivatives"};
}

RunResult cmd_wp(const RunConfig& c) {
  const LatticeParam lat = lattice(c);
  json out{{"wp", cplx_json(wp(c.z, lat))},
           {"wp_prime", cplx_json(wp(c.z, lat, 1))},
           {"zeta", cplx_json(zlog(c.z, lat))},
           {"lambda", cplx_json(lambda_tau(lat))}};
  return {0, out, "wp: evaluated"};
}

RunResult cmd_quasiinv(const RunConfig& c) {
  const LatticeParam lat = lattice(c);
  CatalogParams params;
  params.n = c.n;
  params.m = c.m;
  if (!c.a_sq.empty()) params.asq = c3(c.a_sq);
  const Catalog name = catalog_from_string(c.name);
  if (name == Catalog::Hietarinta && c.a_sq.empty()) params.asq = default_a_sq();
  const PotentialSpec spec = builtin(name, params, lat);
  const auto reports = quasi_invariance_all(spec, {{0, 0}, {1, 0}, {0, 1}, {1, 1}});
  json rows = json::array();
  bool all = true;
  double worst = 0.0;
  for (const auto& r : reports) {
    all = all && r.pass;
    worst = std::max(worst, r.worst);
    rows.push_back({{"term", r.plane.term_index},
                    {"label", spec.terms[r.plane.term_index].label},
                    {"shift", {r.plane.m, r.plane.n}},
                    {"pass", r.pass},
                    {"residue_ok", r.residue_ok},
                    {"worst", r.worst},
                    {"note", r.note}});
  }
  json out{{"name", c.name}, {"planes", rows}, {"all_pass", all}, {"worst", worst}};
  return {0, out,
          "quasiinv-check " + c.name + ": " + std::to_string(reports.size()) + " planes, " +
              (all ? "all pass" : "FAILED") + ", worst " + fmt(worst)};
}

RunResult cmd_locus(const RunConfig& c) {
  const LatticeParam lat = lattice(c);
  const LocusResult r = locus_solve(c.poles, c.mults, lat);
  json out{{"poles", cvec_json(r.poles)}, {"iterations", r.iterations}, {"residual", r.residual}};
  return {0, out, "locus-solve: residual " + fmt(r.residual) + " after " + std::to_string(r.iterations) + " steps"};
}

json b2_solution_json(const B2Solution& s) {
  return {{"p", carr_json(std::array{s.p1, s.p2})},
          {"k", carr_json(std::array{s.k1, s.k2})},
          {"residual", s.residual},
          {"component", s.component},
          {"genericity_ok", s.genericity_ok}};
}

RunResult cmd_b2_variety(const RunConfig& c) {
  const LatticeParam lat = lattice(c);
  const auto [a1, a2] = a_or_default(c);
  const auto sols = solve_variety(a1, a2, lat);
  json rows = json::array();
  double worst = 0.0;
  for (const auto& s : sols) {
    rows.push_back(b2_solution_json(s));
    worst = std::max(worst, s.residual);
  }
  json out{{"a", carr_json(std::array{a1, a2})},
           {"count", sols.size()},
           {"solutions", rows},
           {"max_residual", worst},
           {"pass", worst <= tol(c, "variety")}};
  return {0, out, "b2-variety: " + std::to_string(sols.size()) + " solutions, max residual " + fmt(worst)};
}

json b2_eigen_json(const BlochPointB2& pt, const RunConfig& c, double& worst) {
  const EigenCheck e = eigen_check(pt);
  const ThetaRatio psi{build_phi(pt), b2_delta(pt.lat)};
  const PointFn f = [&psi](std::span<const cplx> x) { return psi(x); };
  const CVec x0 = b2_sample_points(1, pt.lat, 0.1, c.seed)[0];
  const auto lam = pt.multipliers();
  double floquet = 0.0;
  for (int j = 0; j < 2; ++j) {
    const CVec ej = j == 0 ? CVec{1.0, 0.0} : CVec{0.0, 1.0};
    const FloquetResult fr = floquet_factor(f, ej, x0);
    floquet = std::max(floquet, std::abs(fr.multiplier - lam[j]) / std::abs(lam[j]));
  }
  worst = std::max(worst, e.residual);
  return {{"a", carr_json(std::array{pt.a1, pt.a2})},
          {"k", carr_json(std::array{pt.k1, pt.k2})},
          {"E", cplx_json(e.E)},
          {"residual", e.residual},
          {"samples", e.samples},
          {"multipliers", carr_json(lam)},
          {"floquet_error", floquet},
          {"pass", e.residual <= tol(c, "eigen") && floquet <= tol(c, "floquet")}};
}

RunResult cmd_b2_eigen(const RunConfig& c) {
  const LatticeParam lat = lattice(c);
  const auto [a1, a2] = a_or_default(c);
  std::vector<BlochPointB2> pts;
  if (!c.k.empty()) {
    pts.push_back({a1, a2, c.k[0], c.k[1], lat});
  } else {
    for (const auto& s : solve_variety(a1, a2, lat)) pts.push_back({a1, a2, s.k1, s.k2, lat});
  }
  json rows = json::array();
  double worst = 0.0;
  bool all = true;
  for (const auto& pt : pts) {
    rows.push_back(b2_eigen_json(pt, c, worst));
    all = all && rows.back()["pass"].get<bool>();
  }
  json out{{"points", rows}, {"max_residual", worst}, {"all_pass", all}};
  return {0, out, "b2-eigen: " + std::to_string(pts.size()) + " points, max residual " + fmt(worst)};
}

cplx require_omega(const RunConfig& c) {
  if (!c.omega) invalid("omega required");
  return *c.omega;
}

RunResult cmd_qb2_variety(const RunConfig& c) {
  const LatticeParam lat = lattice(c);
  const cplx omega = require_omega(c);
  const auto [a1, a2] = a_or_default(c);
  const auto sols = solve_variety_q(a1, a2, omega, lat);
  json rows = json::array();
  double worst = 0.0;
  for (const auto& s : sols) {
    worst = std::max(worst, s.residual);
    rows.push_back({{"eta", carr_json(std::array{s.eta1, s.eta2})},
                    {"xi", carr_json(std::array{s.xi1, s.xi2})},
                    {"k", carr_json(std::array{s.k1, s.k2})},
                    {"residual", s.residual},
                    {"genericity_ok", s.genericity_ok}});
  }
  json out{{"a", carr_json(std::array{a1, a2})},
           {"omega", cplx_json(omega)},
           {"count", sols.size()},
           {"solutions", rows},
           {"max_residual", worst},
           {"pass", worst <= tol(c, "variety")}};
  return {0, out, "qb2-variety: " + std::to_string(sols.size()) + " solutions, max residual " + fmt(worst)};
}

RunResult cmd_qb2_eigen(const RunConfig& c) {
  const LatticeParam lat = lattice(c);
  const cplx omega = require_omega(c);
  const auto [a1, a2] = a_or_default(c);
  std::vector<QBlochPoint> pts;
  if (!c.k.empty()) {
    pts.push_back({a1, a2, c.k[0], c.k[1], lat});
  } else {
    for (const auto& s : solve_variety_q(a1, a2, omega, lat)) pts.push_back({a1, a2, s.k1, s.k2, lat});
  }
  json rows = json::array();
  double worst = 0.0;
  for (const auto& pt : pts) {
    const QEigenCheck e = eigen_check_q(pt, omega);
    const double r = std::max(e.residual_L, e.residual_L1);
    worst = std::max(worst, r);
    rows.push_back({{"k", carr_json(std::array{pt.k1, pt.k2})},
                    {"E", cplx_json(e.E)},
                    {"E1", cplx_json(e.E1)},
                    {"residual_L", e.residual_L},
                    {"residual_L1", e.residual_L1},
                    {"samples", e.samples}});
  }
  json out{{"omega", cplx_json(omega)}, {"points", rows}, {"max_residual", worst}, {"pass", worst <= tol(c, "eigen")}};
  return {0, out, "qb2-eigen: " + std::to_string(pts.size()) + " points, max residual " + fmt(worst)};
}

RunResult cmd_qb2_limit(const RunConfig& c) {
  const LatticeParam lat = lattice(c);
  const auto [a1, a2] = a_or_default(c);
  const std::vector<double> omegas = c.omegas.empty() ? std::vector<double>{0.1, 0.05, 0.025, 0.0125} : c.omegas;
  const LimitReport rep = limit_check(a1, a2, omegas, lat);
  json rows = json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"omega", r.omega},
                    {"errors", r.errors},
                    {"max_error", r.max_error},
                    {"unmatched_far", r.unmatched_far},
                    {"min_unmatched_norm", r.min_unmatched_norm}});
  json out{{"a", carr_json(std::array{a1, a2})}, {"rows", rows}, {"ratios", rep.ratios}};
  return {0, out, "qb2-limit: " + std::to_string(rep.rows.size()) + " omegas"};
}

C3 hiet_b(const RunConfig& c, const LatticeParam& lat) {
  if (!c.b.empty()) return c3(c.b);
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const cplx b12{u(rng), u(rng) * lat.tau.imag()}, b23{u(rng), u(rng) * lat.tau.imag()};
  return {b12, b23, -(b12 + b23)};
}

HietParams hiet_params(const RunConfig& c, cplx omega) {
  HietParams p{c.a_sq.empty() ? default_a_sq() : c3(c.a_sq), lattice(c), omega};
  p.validate();
  return p;
}

RunResult cmd_hiet_eigen(const RunConfig& c) {
  const HietParams p = hiet_params(c, 0.0);
  const C3 b = hiet_b(c, p.lat);
  const C3 coeffs = solve_coeffs_cont(b, p);
  const FiReport fi = compute_Fi_and_k_cont(b, coeffs, p, c.t);
  const HietBlochPoint pt = solve_point_cont(b, p, c.t);
  const HietEigen e = eigen_check_cont(pt, p);
  json out{{"b", carr_json(b)},
           {"c", carr_json(pt.c)},
           {"k", carr_json(pt.k)},
           {"F", carr_json(fi.F)},
           {"F_sum", fi.sum},
           {"F_spread", fi.spread},
           {"periodicity", fi.periodicity},
           {"E", cplx_json(e.E)},
           {"residual", e.residual},
           {"multipliers", carr_json(hiet_multipliers(pt, p.lat))},
           {"pass", e.residual <= tol(c, "eigen") && fi.sum <= tol(c, "variety") && fi.spread <= tol(c, "constancy")}};
  return {0, out, "hiet-eigen: |F sum| " + fmt(fi.sum) + ", residual " + fmt(e.residual)};
}

RunResult cmd_hietq_eigen(const RunConfig& c) {
  const HietParams p = hiet_params(c, require_omega(c));
  const C3 b = hiet_b(c, p.lat);
  const HietQReport r = solve_point_q(b, p, c.t);
  json out{{"b", carr_json(b)},
           {"omega", cplx_json(p.omega)},
           {"c", carr_json(r.point.c)},
           {"k", carr_json(r.point.k)},
           {"qscon_product", r.qscon_product},
           {"qfcon", r.qfcon},
           {"more", r.more},
           {"blax", r.blax},
           {"E", cplx_json(r.E)},
           {"residual", r.residual},
           {"pass", r.residual <= tol(c, "difference_eigen") && r.qscon_product <= tol(c, "variety") &&
                        r.more <= tol(c, "variety")}};
  return {0, out, "hietq-eigen: residual " + fmt(r.residual) + ", qscon " + fmt(r.qscon_product)};
}

void write_psi_csv(const std::string& path, const ThetaRatio& Psi) {
  std::ofstream os(path);
  if (!os) invalid("cannot write " + path);
  os.precision(17);
  os << "x1_re,x1_im,x2_re,x2_im,f_re,f_im\n";
  for (const CVec& x : real_grid(50)) {
    const cplx v = Psi(x);
    os << x[0].real() << ',' << x[0].imag() << ',' << x[1].real() << ',' << x[1].imag() << ',' << v.real() << ','
       << v.imag() << '\n';
  }
}

RunResult cmd_spectrum(const RunConfig& c) {
  if (!c.label) invalid("label (m, n) required");
  const LatticeParam lat = lattice(c);
  const SpectrumLabel label{(*c.label)[0], (*c.label)[1]};
  label.validate();
  const bool admissible = label.admissible();
  const SpectralPoint pt = !admissible && (label.m == 0 || label.n == 0)
                               ? wall_point(label, lat, 0.15 * lat.tau)
                               : quantize_solve(label, lat, c.a.size() == 2 ? std::optional{std::array{c.a[0], c.a[1]}}
                                                                            : std::nullopt);
  json out{{"label", {label.m, label.n}},
           {"admissible", admissible},
           {"a1", cplx_json(pt.a1)},
           {"a2", cplx_json(pt.a2)},
           {"residual", pt.residual},
           {"norm_ratio", symmetrized_norm_ratio(pt, lat)}};
  std::string summary = "spectrum (" + std::to_string(label.m) + "," + std::to_string(label.n) + "): residual " +
                        fmt(pt.residual);
  const ThetaRatio Psi = symmetrize(pt, lat);
  if (admissible) {
    const RegularityReport reg = regularity_check(Psi, lat);
    const SpectrumEigen e = spectrum_eigen_check(pt, lat);
    out["E"] = cplx_json(e.E);
    out["eigen_residual"] = e.residual;
    out["gamma_fits"] = reg.gamma;
    out["grid_max"] = reg.grid_max;
    out["finite"] = reg.finite;
    out["weyl_symmetry"] = reg.weyl_symmetry;
    out["line_reflection"] = reg.line_reflection;
    out["pass"] = pt.residual <= tol(c, "spectrum") && reg.finite;
    summary += ", E " + fmt(e.E.real()) + ", grid max " + fmt(reg.grid_max);
  } else {
    out["pass"] = out["norm_ratio"].get<double>() <= tol(c, "zero_family");
    summary += ", norm ratio " + fmt(out["norm_ratio"].get<double>());
  }
  if (!c.csv_path.empty()) write_psi_csv(c.csv_path, Psi);
  return {0, out, summary};
}

// Every number stored under a key containing "residual", in document order.
void collect_residuals(const json& j, const std::string& path, std::vector<std::pair<std::string, double>>& out) {
  if (j.is_object()) {
    for (const auto& [key, v] : j.items()) {
      if (v.is_number() && key.find("residual") != std::string::npos)
        out.emplace_back(path + "/" + key, v.get<double>());
      else
        collect_residuals(v, path + "/" + key, out);
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) collect_residuals(j[i], path + "/" + std::to_string(i), out);
  }
}

RunResult cmd_verify(const RunConfig& c) {
  if (c.verify_path.empty()) invalid("verify-file requires a path");
  std::ifstream is(c.verify_path);
  if (!is) invalid("cannot read " + c.verify_path);
  json recorded;
  try {
    recorded = json::parse(is);
  } catch (const json::exception& e) {
    invalid(std::string("bad JSON: ") + e.what());
  }
  if (!recorded.contains("config") || !recorded.contains("result")) invalid("not a result file");
  RunConfig again = RunConfig::from_json(recorded["config"]);
  if (again.command == "verify-file") invalid("cannot verify a verification");
  again.validate();
  const RunResult fresh = run(again);
  if (fresh.exit_code != 0) fail(ErrorKind::Incompatible, "re-run failed: " + fresh.summary);
  std::vector<std::pair<std::string, double>> old_r, new_r;
  collect_residuals(recorded["result"], "", old_r);
  collect_residuals(fresh.output["result"], "", new_r);
  if (old_r.size() != new_r.size()) fail(ErrorKind::Incompatible, "result shape changed");
  double worst = 0.0;
  for (std::size_t i = 0; i < old_r.size(); ++i) {
    if (old_r[i].first != new_r[i].first) fail(ErrorKind::Incompatible, "result shape changed at " + old_r[i].first);
    worst = std::max(worst, std::abs(old_r[i].second - new_r[i].second));
  }
  const bool ok = worst <= tol(c, "verify");
  json out{{"file", c.verify_path}, {"compared", old_r.size()}, {"max_difference", worst}, {"verified", ok}};
  return {ok ? 0 : 3, out, "verify-file: " + std::to_string(old_r.size()) + " residuals, max difference " + fmt(worst)};
}

const std::map<std::string, std::function<RunResult(const RunConfig&)>>& dispatch_table() {
  static const std::map<std::string, std::function<RunResult(const RunConfig&)>> table{
      {"theta", cmd_theta},
      {"wp", cmd_wp},
      {"quasiinv-check", cmd_quasiinv},
      {"locus-solve", cmd_locus},
      {"b2-variety", cmd_b2_variety},
      {"b2-eigen", cmd_b2_eigen},
      {"qb2-variety", cmd_qb2_variety},
      {"qb2-eigen", cmd_qb2_eigen},
      {"qb2-limit", cmd_qb2_limit},
      {"hiet-eigen", cmd_hiet_eigen},
      {"hietq-eigen", cmd_hietq_eigen},
      {"spectrum", cmd_spectrum},
      {"verify-file", cmd_verify},
  };
  return table;
}

// The message without the "Kind: " prefix that fail() adds.
std::string bare_message(const Error& e) {
  const std::string what = e.what(), prefix = std::string(to_string(e.kind())) + ": ";
  return what.starts_with(prefix) ? what.substr(prefix.size()) : what;
}

json error_json(const std::string& kind, const std::string& message) {
  return {{"error", {{"kind", kind}, {"message", message}}}};
}

}  // namespace

std::map<std::string, double> default_tolerances() {
  return {{"variety", 1e-10},          {"eigen", 1e-8},   {"difference_eigen", 1e-10}, {"floquet", 1e-10},
          {"constancy", 1e-9},         {"spectrum", 1e-11}, {"zero_family", 1e-8},      {"verify", 1e-12}};
}

cplx parse_cplx(const std::string& s) {
  const std::string t = s.find('[') != std::string::npos ? s : "[" + s + "]";
  json j;
  try {
    j = json::parse(t);
  } catch (const json::exception&) {
    invalid("cannot parse complex number '" + s + "'");
  }
  if (j.is_array() && j.size() == 1) j = j[0];
  if (!j.is_number() && !(j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()))
    invalid("cannot parse complex number '" + s + "'");
  return cplx_from_json(j);
}

void RunConfig::validate() const {
  if (!dispatch_table().contains(command)) invalid("unknown command '" + command + "'");
  for (const auto& [key, v] : tolerances) {
    if (!default_tolerances().contains(key)) invalid("unknown tolerance '" + key + "'");
    if (!(v >= 1e-15)) invalid("tolerance '" + key + "' must be >= 1e-15");
  }
  auto need_size = [&](const CVec& v, std::size_t n, const char* what, bool optional) {
    if (v.empty() && optional) return;
    if (v.size() != n) invalid(std::string(what) + " needs " + std::to_string(n) + " complex values");
  };
  const bool b2 = command.starts_with("b2-") || command.starts_with("qb2-");
  if (b2) {
    need_size(a, 2, "a", true);
    need_size(k, 2, "k", true);
  }
  if (command.starts_with("qb2-") && command != "qb2-limit" && !omega) invalid("omega required");
  if (command == "hietq-eigen" && !omega) invalid("omega required");
  if (command.starts_with("hiet")) {
    need_size(b, 3, "b", true);
    need_size(a_sq, 3, "a_sq", true);
  }
  if (command == "spectrum") {
    if (!label) invalid("label (m, n) required");
    need_size(a, 2, "a", true);
  }
  if (command == "locus-solve") {
    if (poles.empty()) invalid("poles required");
    if (mults.size() != poles.size()) invalid("one multiplicity per pole required");
  }
  if (command == "theta" && (order < 0 || order > kMaxThetaOrder)) invalid("order must be in 0..8");
  if (command == "qb2-limit")
    for (double w : omegas)
      if (!(w > 0.0)) invalid("omegas must be positive");
  if (command == "verify-file" && verify_path.empty()) invalid("verify-file requires a path");
}

json RunConfig::to_json() const {
  json j{{"command", command},
         {"tau", cplx_json(tau)},
         {"z", cplx_json(z)},
         {"order", order},
         {"name", name},
         {"n", n},
         {"m", m},
         {"t", cplx_json(t)},
         {"tolerances", tolerances},
         {"seed", seed}};
  if (omega) j["omega"] = cplx_json(*omega);
  if (!a.empty()) j["a"] = cvec_json(a);
  if (!k.empty()) j["k"] = cvec_json(k);
  if (!b.empty()) j["b"] = cvec_json(b);
  if (!a_sq.empty()) j["a_sq"] = cvec_json(a_sq);
  if (!poles.empty()) j["poles"] = cvec_json(poles);
  if (!mults.empty()) j["mults"] = mults;
  if (label) j["label"] = *label;
  if (!omegas.empty()) j["omegas"] = omegas;
  if (!verify_path.empty()) j["verify_path"] = verify_path;
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) invalid("config must be a JSON object");
  RunConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "command") c.command = v.get<std::string>();
      else if (key == "tau") c.tau = cplx_from_json(v);
      else if (key == "omega") c.omega = cplx_from_json(v);
      else if (key == "z") c.z = cplx_from_json(v);
      else if (key == "t") c.t = cplx_from_json(v);
      else if (key == "a") c.a = cvec_from(v);
      else if (key == "k") c.k = cvec_from(v);
      else if (key == "b") c.b = cvec_from(v);
      else if (key == "a_sq") c.a_sq = cvec_from(v);
      else if (key == "poles") c.poles = cvec_from(v);
      else if (key == "mults") c.mults = v.get<std::vector<int>>();
      else if (key == "label") c.label = v.get<std::array<int, 2>>();
      else if (key == "omegas") c.omegas = v.get<std::vector<double>>();
      else if (key == "order") c.order = v.get<int>();
      else if (key == "name") c.name = v.get<std::string>();
      else if (key == "n") c.n = v.get<int>();
      else if (key == "m") c.m = v.get<int>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "tolerances")
        for (const auto& [tk, tv] : v.items()) c.tolerances[tk] = tv.get<double>();
      else if (key == "output") c.output_path = v.get<std::string>();
      else if (key == "csv") c.csv_path = v.get<std::string>();
      else if (key == "manifest") c.manifest_path = v.get<std::string>();
      else if (key == "verify_path") c.verify_path = v.get<std::string>();
      else invalid("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    invalid(std::string("bad config value: ") + e.what());
  }
  return c;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation:
    case ErrorKind::BadParams:
    case ErrorKind::BadModulus:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::ResonantOmega:
    case ErrorKind::DegenerateA:
    case ErrorKind::VerticalComponent:
    case ErrorKind::CoincidentPoles:
      return 2;
    default:
      return 3;
  }
}

RunResult run(const RunConfig& config) {
  RunResult r;
  try {
    config.validate();
    r = dispatch_table().at(config.command)(config);
    r.output = json{{"command", config.command},
                    {"config", config.to_json()},
                    {"version", kToolVersion},
                    {"result", std::move(r.output)},
                    {"tolerances", config.tolerances}};
    if (r.exit_code != 0) r.output["exit_code"] = r.exit_code;
  } catch (const Error& e) {
    r.exit_code = exit_code_for(e.kind());
    r.output = error_json(std::string(to_string(e.kind())), bare_message(e));
    r.output["exit_code"] = r.exit_code;
    r.output["command"] = config.command;
    r.summary = config.command + ": " + e.what();
  }
  return r;
}

json make_manifest(const RunConfig& config, const RunResult& result, double wall_seconds) {
  return {{"tool", "lamelab"},
          {"version", kToolVersion},
          {"config", config.to_json()},
          {"exit_code", result.exit_code},
          {"threads", worker_count()},
          {"simd", std::string(kernels::to_string(kernels::detected_isa()))},
          {"wall_seconds", wall_seconds}};
}

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::Validation, "cannot write " + path);
  os << text;
}

// Flags shared by every subcommand, stored as strings and applied on top of
// the --config file.
struct FlagValues {
  std::string config_path, tau, omega, z, t, name, output, csv, manifest, file;
  std::vector<std::string> a, k, b, a_sq, poles, tolerance;
  std::vector<int> mults, label;
  std::vector<double> omegas;
  int order = -1, n = -1, m = -1;
  std::int64_t seed = -1;
};

void add_flags(CLI::App& sub, FlagValues& f) {
  sub.add_option("--config", f.config_path, "JSON run configuration");
  sub.add_option("--tau", f.tau, "modular parameter, re,im");
  sub.add_option("--omega", f.omega, "difference step, re,im");
  sub.add_option("--z", f.z, "argument, re,im");
  sub.add_option("--order", f.order, "highest theta derivative");
  sub.add_option("--a", f.a, "spectral parameters a1 a2, each re,im");
  sub.add_option("--k", f.k, "quasimomenta k1 k2, each re,im");
  sub.add_option("--b", f.b, "Hietarinta offsets b12 b23 b31, each re,im");
  sub.add_option("--a-sq", f.a_sq, "Hietarinta a1^2 a2^2 a3^2, each re,im");
  sub.add_option("--t", f.t, "Hietarinta free parameter, re,im");
  sub.add_option("--poles", f.poles, "initial poles, each re,im");
  sub.add_option("--mults", f.mults, "pole multiplicities");
  sub.add_option("--label", f.label, "spectral label m n")->expected(2);
  sub.add_option("--m", f.m, "label m, or catalog m");
  sub.add_option("--n", f.n, "label n, or catalog n");
  sub.add_option("--omegas", f.omegas, "omega sequence for qb2-limit");
  sub.add_option("--name", f.name, "catalog entry for quasiinv-check");
  sub.add_option("--tolerance", f.tolerance, "override, key=value");
  sub.add_option("--seed", f.seed, "random seed");
  sub.add_option("-o,--output", f.output, "result JSON path (stdout if absent)");
  sub.add_option("--csv", f.csv, "CSV grid path (spectrum)");
  sub.add_option("--manifest", f.manifest, "manifest path (default <output>.manifest.json)");
}

CVec parse_list(const std::vector<std::string>& v) {
  CVec out;
  for (const auto& s : v) out.push_back(parse_cplx(s));
  return out;
}

RunConfig build_config(const std::string& command, const FlagValues& f) {
  RunConfig c;
  if (!f.config_path.empty()) {
    std::ifstream is(f.config_path);
    if (!is) invalid("cannot read " + f.config_path);
    json j;
    try {
      j = json::parse(is);
    } catch (const json::exception& e) {
      invalid(std::string("bad JSON in config: ") + e.what());
    }
    c = RunConfig::from_json(j);
    if (!c.command.empty() && c.command != command) invalid("config command differs from subcommand");
  }
  c.command = command;
  if (!f.tau.empty()) c.tau = parse_cplx(f.tau);
  if (!f.omega.empty()) c.omega = parse_cplx(f.omega);
  if (!f.z.empty()) c.z = parse_cplx(f.z);
  if (!f.t.empty()) c.t = parse_cplx(f.t);
  if (!f.a.empty()) c.a = parse_list(f.a);
  if (!f.k.empty()) c.k = parse_list(f.k);
  if (!f.b.empty()) c.b = parse_list(f.b);
  if (!f.a_sq.empty()) c.a_sq = parse_list(f.a_sq);
  if (!f.poles.empty()) c.poles = parse_list(f.poles);
  if (!f.mults.empty()) c.mults = f.mults;
  if (!f.omegas.empty()) c.omegas = f.omegas;
  if (!f.name.empty()) c.name = f.name;
  if (f.order >= 0) c.order = f.order;
  if (f.seed >= 0) c.seed = static_cast<std::uint64_t>(f.seed);
  if (f.label.size() == 2) c.label = std::array{f.label[0], f.label[1]};
  if (command == "spectrum") {
    if (f.m >= 0 || f.n >= 0) {
      if (f.m < 0 || f.n < 0) invalid("spectrum needs both --m and --n");
      c.label = std::array{f.m, f.n};
    }
  } else {
    if (f.m >= 0) c.m = f.m;
    if (f.n >= 0) c.n = f.n;
  }
  for (const auto& kv : f.tolerance) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) invalid("tolerance override must be key=value");
    try {
      c.tolerances[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      invalid("bad tolerance value in '" + kv + "'");
    }
  }
  if (!f.output.empty()) c.output_path = f.output;
  if (!f.csv.empty()) c.csv_path = f.csv;
  if (!f.manifest.empty()) c.manifest_path = f.manifest;
  if (!f.file.empty()) c.verify_path = f.file;
  return c;
}

int emit(const RunConfig& c, const RunResult& r, double seconds) {
  const std::string text = r.output.dump(2) + "\n";
  try {
    if (c.output_path.empty()) {
      std::cout << text;
    } else {
      write_file(c.output_path, text);
      const std::string mpath = c.manifest_path.empty() ? c.output_path + ".manifest.json" : c.manifest_path;
      write_file(mpath, make_manifest(c, r, seconds).dump(2) + "\n");
    }
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  std::cerr << r.summary << "\n";
  return r.exit_code;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Elliptic Calogero-Moser eigenfunctions: solvers and checks"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  FlagValues flags;
  for (const auto& [name, description] : kCommands) {
    CLI::App* sub = app.add_subcommand(name, description);
    add_flags(*sub, flags);
    if (name == "verify-file") sub->add_option("file", flags.file, "result JSON to re-run")->required();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    json err = error_json("Validation", e.what());
    err["exit_code"] = 2;
    std::cout << err.dump(2) << "\n";
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  const auto start = std::chrono::steady_clock::now();
  RunConfig config;
  RunResult result;
  try {
    config = build_config(command, flags);
    result = run(config);
  } catch (const Error& e) {
    config.command = command;
    result.exit_code = exit_code_for(e.kind());
    result.output = error_json(std::string(to_string(e.kind())), bare_message(e));
    result.output["exit_code"] = result.exit_code;
    result.output["command"] = command;
    result.summary = command + ": " + e.what();
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return emit(config, result, seconds);
}

}  // namespace lamelab
