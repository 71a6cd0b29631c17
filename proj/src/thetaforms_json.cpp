#include "lamelab/errors.hpp"
#include "lamelab/thetaforms.hpp"

namespace lamelab {

using nlohmann::json;

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

cplx cplx_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) fail(ErrorKind::Validation, "complex number must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

namespace {

json cvec_json(const CVec& v) {
  json a = json::array();
  for (cplx z : v) a.push_back(cplx_json(z));
  return a;
}

CVec cvec_from_json(const json& j) {
  CVec v;
  for (const auto& e : j) v.push_back(cplx_from_json(e));
  return v;
}

json rational_json(Rational r) { return json::array({r.num, r.den}); }

Rational rational_from_json(const json& j) {
  return Rational(j.at(0).get<long>(), j.at(1).get<long>());
}

}  // namespace

json to_json(const ThetaSum& f) {
  json terms = json::array();
  for (const auto& t : f.terms()) {
    json factors = json::array();
    for (const auto& fac : t.factors)
      factors.push_back({{"grad", cvec_json(fac.form.grad)},
                         {"offset", cplx_json(fac.form.offset)},
                         {"alpha", rational_json(fac.ch.alpha)},
                         {"beta", rational_json(fac.ch.beta)},
                         {"modulus_mult", fac.modulus_mult},
                         {"order", fac.order}});
    terms.push_back({{"coeff", cplx_json(t.coeff)}, {"exp", cvec_json(t.exp_cov)}, {"factors", factors}});
  }
  const auto& lat = f.lattice();
  return {{"dim", f.dim()},
          {"tau", cplx_json(lat.tau)},
          {"series_tol", lat.series_tol},
          {"max_terms", lat.max_terms},
          {"terms", terms}};
}

ThetaSum theta_sum_from_json(const json& j) {
  LatticeParam lat{cplx_from_json(j.at("tau")), j.value("series_tol", 1e-16), j.value("max_terms", 200)};
  ThetaSum f(j.at("dim").get<int>(), lat);
  for (const auto& jt : j.at("terms")) {
    ThetaTerm t{cplx_from_json(jt.at("coeff")), cvec_from_json(jt.at("exp")), {}};
    for (const auto& jf : jt.at("factors"))
      t.factors.push_back({AffineForm{cvec_from_json(jf.at("grad")), cplx_from_json(jf.at("offset"))},
                           ThetaCharacteristic{rational_from_json(jf.at("alpha")), rational_from_json(jf.at("beta"))},
                           jf.at("modulus_mult").get<int>(), jf.at("order").get<int>()});
    f.add_term(std::move(t));
  }
  return f;
}

}  // namespace lamelab
