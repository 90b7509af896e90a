#include "config.hpp"

#include <fstream>
#include <sstream>

namespace pertlab::app {

namespace {

Exponent exponent_of(const Json& j) {
  if (j.is_string()) return Exponent::parse(j.get<std::string>());
  if (j.is_number_integer()) return Exponent{j.get<std::int64_t>(), 1};
  if (j.is_number()) return Exponent::from_double(j.get<double>());
  throw DomainError("exponent must be a number or a string such as \"3/2\"");
}

BigInt bigint_of(const Json& j) {
  if (j.is_string()) return parse_bigint(j.get<std::string>());
  if (j.is_number_unsigned()) return BigInt(j.get<std::uint64_t>());
  if (j.is_number_integer()) return BigInt(j.get<std::int64_t>());
  throw DomainError("integer field must be an integer or a decimal string");
}

Rational rational_of(const Json& j) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (!j.is_string()) throw DomainError("rational field must be a string such as \"1/15\"");
  const std::string s = j.get<std::string>();
  const auto slash = s.find('/');
  if (slash == std::string::npos) return Rational(BigInt(s));
  const BigInt den(s.substr(slash + 1));
  if (den == 0) throw DivisionByZeroError("zero denominator in " + s);
  return Rational(BigInt(s.substr(0, slash)), den);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
  if (!j.is_object()) throw DomainError("config must be a JSON object");
  ExperimentConfig c;
  if (j.contains("regime")) c.regime = parse_regime(j.at("regime").get<std::string>());
  c.d = j.value("d", c.d);
  if (j.contains("q")) c.q = exponent_of(j.at("q"));
  if (j.contains("p") && !j.at("p").is_null()) c.p = exponent_of(j.at("p"));
  c.u_min = j.value("u_min", c.u_min);
  c.u_max = j.value("u_max", c.u_max);
  c.seed = j.value("seed", c.seed);
  c.base = j.value("base", Json{{"kind", "rule"}, {"rule_name", "cubic_ray"}});
  if (!c.base.is_object()) throw DomainError("base must be a set description object");
  if (j.contains("radius_cap")) c.radius_cap = bigint_of(j.at("radius_cap"));
  c.point_budget = j.value("point_budget", c.point_budget);
  c.materialize_cap = j.value("materialize_cap", c.materialize_cap);

  if (j.contains("certify")) {
    const Json& cj = j.at("certify");
    if (cj.contains("u")) c.certify_u = cj.at("u").get<int>();
    if (cj.contains("audit_radius")) c.audit_radius = cj.at("audit_radius").get<std::int64_t>();
    c.brute_force_samples = cj.value("brute_force_samples", c.brute_force_samples);
  }
  if (j.contains("transfer")) {
    const Json& tj = j.at("transfer");
    if (tj.contains("epsilon")) c.epsilon = rational_of(tj.at("epsilon"));
    if (tj.contains("t")) {
      for (const auto& t : tj.at("t")) c.t_values.push_back(bigint_of(t));
    }
    if (tj.contains("t_multipliers")) c.t_multipliers = tj.at("t_multipliers").get<std::vector<std::int64_t>>();
    c.alpha_min = tj.value("alpha_min", c.alpha_min);
    c.alpha_max = tj.value("alpha_max", c.alpha_max);
  }
  if (j.contains("average")) c.average_N = j.at("average").value("N", c.average_N);
  c.validate();
  return c;
}

Json ExperimentConfig::to_json() const {
  Json ts = Json::array();
  for (const auto& t : t_values) ts.push_back(to_string(t));
  Json certify = Json::object();
  if (certify_u) certify["u"] = *certify_u;
  if (audit_radius) certify["audit_radius"] = *audit_radius;
  certify["brute_force_samples"] = brute_force_samples;
  return Json{{"regime", to_string(regime)},
              {"d", d},
              {"q", q.to_string()},
              {"p", p ? Json(p->to_string()) : Json(nullptr)},
              {"u_min", u_min},
              {"u_max", u_max},
              {"seed", seed},
              {"base", base},
              {"radius_cap", to_string(radius_cap)},
              {"point_budget", point_budget},
              {"materialize_cap", materialize_cap},
              {"certify", certify},
              {"transfer",
               {{"epsilon", to_string(epsilon)},
                {"t", ts},
                {"t_multipliers", t_multipliers},
                {"alpha_min", alpha_min},
                {"alpha_max", alpha_max}}},
              {"average", {{"N", average_N}}}};
}

void ExperimentConfig::validate() const {
  validate_dim(d);
  if (q < Exponent{1, 1}) throw DomainError("q must be >= 1");
  if (regime == Regime::T1) {
    if (p && !(q < *p)) throw DomainError("regime T1 needs p > q");
  } else {
    if (!(Exponent{1, 1} < q)) throw DomainError("regime T2 needs q > 1");
    if (!p) throw DomainError("regime T2 needs p with 1 <= p < q");
    if (*p < Exponent{1, 1} || !(*p < q)) throw DomainError("regime T2 needs 1 <= p < q");
  }
  if (u_min < 1 || u_max < u_min) throw DomainError("need 1 <= u_min <= u_max");
  if (certify_u && (*certify_u < u_min || *certify_u > u_max)) throw DomainError("certify.u outside [u_min, u_max]");
  if (audit_radius && *audit_radius < 0) throw DomainError("audit radius must be nonnegative");
  if (epsilon <= 0 || epsilon >= 1) throw DomainError("transfer.epsilon must lie in (0, 1)");
  for (auto m : t_multipliers)
    if (m < 1) throw DomainError("t multipliers must be positive");
  if (alpha_min < 1 || alpha_max < alpha_min) throw DomainError("need 1 <= alpha_min <= alpha_max");
  for (auto n : average_N)
    if (n < 0) throw DomainError("average radii must be nonnegative");
}

ConstructionConfig ExperimentConfig::construction() const {
  ConstructionConfig c;
  c.regime = regime;
  c.q = q;
  c.p = p;
  c.d = d;
  c.u_min = u_min;
  c.u_max = u_max;
  Json spec = base;
  spec["dim"] = d;
  if (spec.value("kind", std::string()) == "random" && !spec.contains("seed")) spec["seed"] = seed;
  c.base = parse_base_set(spec);
  c.radius_cap = radius_cap;
  c.materialize_cap = materialize_cap;
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config file " + path);
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError("config " + path + " is not valid JSON: " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

}  // namespace pertlab::app
