#include <set>
#include <string>

#include "ellcov/errors.hpp"
#include "ellcov/state_io.hpp"

namespace ellcov {

namespace {

void only_keys(const Json& j, const std::set<std::string>& allowed, const char* what) {
  if (!j.is_object()) throw StateFormatError(std::string(what) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw StateFormatError(std::string(what) + ": unknown field '" + key + "'");
  }
}

const Json& field(const Json& j, const std::string& key, const char* what) {
  if (!j.contains(key)) throw StateFormatError(std::string(what) + ": missing field '" + key + "'");
  return j.at(key);
}

Json complex_list(const std::vector<cplx>& v) {
  Json out = Json::array();
  for (const cplx z : v) out.push_back(complex_to_json(z));
  return out;
}

std::vector<cplx> complex_list_from(const Json& j, const std::string& what) {
  if (!j.is_array()) throw StateFormatError(what + ": expected an array");
  std::vector<cplx> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(complex_from_json(j[k], what + "[" + std::to_string(k) + "]"));
  return out;
}

int int_from(const Json& j, const std::string& what) {
  if (!j.is_number_integer()) throw StateFormatError(what + ": expected an integer");
  return j.get<int>();
}

std::string coeff_key(const char* name, std::size_t m, const SigmaIndex& idx) {
  return std::string(name) + "[" + std::to_string(m) + "]." + std::to_string(idx.A) + std::to_string(idx.B);
}

Json coeff_table(const char* name, const SigmaAlgebra& alg, const std::vector<SlkCoefficients>& list) {
  Json out = Json::object();
  for (std::size_t m = 0; m < list.size(); ++m)
    for (const auto& idx : alg.indices()) out[coeff_key(name, m, idx)] = complex_to_json(list[m][idx]);
  return out;
}

std::vector<SlkCoefficients> coeff_table_from(const char* name, const Json& j, int K, std::size_t count) {
  if (!j.is_object()) throw StateFormatError(std::string(name) + " coefficients: expected an object");
  if (K < 2 || K > 10) throw StateFormatError("K must lie in [2, 10]");
  const SigmaAlgebra alg(K);
  std::vector<SlkCoefficients> out(count, SlkCoefficients(K));
  std::set<std::string> expected;
  for (std::size_t m = 0; m < count; ++m)
    for (const auto& idx : alg.indices()) {
      const std::string key = coeff_key(name, m, idx);
      expected.insert(key);
      out[m][idx] = complex_from_json(field(j, key, name), key);
    }
  for (const auto& [key, value] : j.items()) {
    if (!expected.count(key)) throw StateFormatError(std::string(name) + " coefficients: unexpected key '" + key + "'");
  }
  return out;
}

}  // namespace

Json complex_to_json(cplx z) { return Json::array({z.real(), z.imag()}); }

cplx complex_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw StateFormatError(what + ": expected [re, im]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

Json covering_to_json(const EllipticCoveringState& s) {
  Json j;
  j["N"] = s.N;
  j["lambda"] = complex_list(s.lambda);
  j["gamma"] = complex_list(s.gamma);
  j["alpha"] = complex_list(s.alpha);
  j["mu"] = complex_to_json(s.mu.value());
  j["basepoint_shift"] = complex_to_json(s.basepoint_shift);
  return j;
}

EllipticCoveringState covering_from_json(const Json& j) {
  const char* what = "covering state";
  only_keys(j, {"N", "lambda", "gamma", "alpha", "mu", "basepoint_shift"}, what);
  EllipticCoveringState s;
  s.N = int_from(field(j, "N", what), "N");
  s.lambda = complex_list_from(field(j, "lambda", what), "lambda");
  s.gamma = complex_list_from(field(j, "gamma", what), "gamma");
  s.alpha = complex_list_from(field(j, "alpha", what), "alpha");
  try {
    s.mu = ModularParameter(complex_from_json(field(j, "mu", what), "mu"));
  } catch (const InvalidModulus& e) {
    throw StateFormatError(std::string("mu: ") + e.what());
  }
  s.basepoint_shift = j.contains("basepoint_shift") ? complex_from_json(j["basepoint_shift"], "basepoint_shift") : 0.0;
  s.validate();
  return s;
}

Json jstate_to_json(const JState& J) {
  J.validate();
  Json j;
  j["K"] = J.K;
  j["count"] = J.size();
  j["coefficients"] = coeff_table("J", SigmaAlgebra(J.K), J.J);
  return j;
}

JState jstate_from_json(const Json& j) {
  const char* what = "J state";
  only_keys(j, {"K", "count", "coefficients"}, what);
  JState J;
  J.K = int_from(field(j, "K", what), "K");
  const int count = int_from(field(j, "count", what), "count");
  if (count < 0) throw StateFormatError("count must be non-negative");
  J.J = coeff_table_from("J", field(j, "coefficients", what), J.K, static_cast<std::size_t>(count));
  return J;
}

Json schlesinger_to_json(const SchlesingerState& s, std::optional<unsigned> seed) {
  Json j;
  j["K"] = s.K;
  j["mu"] = complex_to_json(s.mu.value());
  j["z"] = complex_list(s.z);
  j["residues"] = coeff_table("A", SigmaAlgebra(s.K), s.A);
  j["trA2"] = complex_list(trace_squares(SigmaAlgebra(s.K), s));
  if (seed) j["seed"] = *seed;
  return j;
}

SchlesingerState schlesinger_from_json(const Json& j) {
  const char* what = "Schlesinger state";
  only_keys(j, {"K", "mu", "z", "residues", "trA2", "seed"}, what);
  const int K = int_from(field(j, "K", what), "K");
  std::vector<cplx> z = complex_list_from(field(j, "z", what), "z");
  const std::size_t L = z.size();
  std::vector<SlkCoefficients> A = coeff_table_from("A", field(j, "residues", what), K, L);
  ModularParameter mu(cplx(0.0, 1.0));
  try {
    mu = ModularParameter(complex_from_json(field(j, "mu", what), "mu"));
  } catch (const InvalidModulus& e) {
    throw StateFormatError(std::string("mu: ") + e.what());
  }
  return make_schlesinger_state(K, std::move(z), std::move(A), mu);
}

}  // namespace ellcov
