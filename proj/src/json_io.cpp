#include "coact/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "coact/errors.hpp"

namespace coact::json_io {

using mechanism::ResponseFunction;
using mechanism::ValueSet;
using mechanism::VariableDomain;

json read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

namespace {

// Wraps nlohmann type errors so callers only see library errors.
template <class T>
T get(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw UsageError(where + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError(where + ": field '" + key + "' has the wrong type");
  }
}

json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

json level(const VariableDomain& d, std::size_t i) {
  if (!d.labels().empty()) return d.labels()[i];
  return d.value(i);
}

std::size_t level_from_json(const VariableDomain& d, const json& j) {
  if (j.is_string()) {
    const auto& labels = d.labels();
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == j.get<std::string>()) return i;
    throw DomainError("'" + j.get<std::string>() + "' is not a level of " + d.name());
  }
  if (j.is_number()) return d.index_of(j.get<double>());
  throw UsageError("a level of " + d.name() + " must be a number or a label");
}

std::vector<std::vector<double>> conditional(const json& j, const char* key,
                                             const std::string& where) {
  return get<std::vector<std::vector<double>>>(j, key, where);
}

}  // namespace

// ---------------------------------------------------------------------------
// Inputs

VariableDomain domain_from_json(const json& j, const std::string& default_name) {
  const std::string where = "domain " + default_name;
  if (j.is_array()) {
    if (!j.empty() && j.front().is_string()) {
      std::vector<std::string> labels;
      std::vector<double> values;
      for (const auto& x : j) {
        if (!x.is_string()) throw UsageError(where + ": mixes labels and numbers");
        values.push_back(static_cast<double>(labels.size()));
        labels.push_back(x.get<std::string>());
      }
      return VariableDomain(default_name, values, labels);
    }
    std::vector<double> values;
    for (const auto& x : j) {
      if (!x.is_number()) throw UsageError(where + ": levels must be numbers or labels");
      values.push_back(x.get<double>());
    }
    return VariableDomain(default_name, values);
  }
  if (!j.is_object()) throw UsageError(where + ": expected a list or an object");
  const auto name = j.value("name", default_name);
  const bool ordered = j.value("ordered", true);
  std::vector<std::string> labels;
  if (j.contains("labels")) labels = get<std::vector<std::string>>(j, "labels", where);
  std::vector<double> values;
  if (j.contains("values")) {
    values = get<std::vector<double>>(j, "values", where);
  } else {
    if (labels.empty()) throw UsageError(where + ": needs 'values' or 'labels'");
    for (std::size_t i = 0; i < labels.size(); ++i) values.push_back(static_cast<double>(i));
  }
  return VariableDomain(name, values, labels, ordered);
}

json to_json(const VariableDomain& d) {
  json j;
  j["name"] = d.name();
  j["values"] = d.values();
  if (!d.labels().empty()) j["labels"] = d.labels();
  j["ordered"] = d.ordered();
  return j;
}

ResponseFunction response_from_json(const json& j) {
  if (!j.is_object() || !j.contains("domains") || !j.contains("table"))
    throw UsageError("response function needs 'domains' and 'table'");
  const auto& d = j.at("domains");
  if (!d.contains("A") || !d.contains("B")) throw UsageError("domains need 'A' and 'B'");
  auto a = domain_from_json(d.at("A"), "A");
  auto b = domain_from_json(d.at("B"), "B");
  auto c = d.contains("C") ? domain_from_json(d.at("C"), "C") : VariableDomain::singleton("C");
  auto u = d.contains("U") ? domain_from_json(d.at("U"), "U") : VariableDomain::singleton("U");
  std::vector<std::uint8_t> table;
  for (const auto& x : j.at("table")) {
    if (x.is_boolean()) {
      table.push_back(x.get<bool>());
    } else if (x.is_number_integer() && (x.get<int>() == 0 || x.get<int>() == 1)) {
      table.push_back(static_cast<std::uint8_t>(x.get<int>()));
    } else {
      throw UsageError("table entries must be 0 or 1");
    }
  }
  return ResponseFunction(std::move(a), std::move(b), std::move(c), std::move(u), std::move(table));
}

json to_json(const ResponseFunction& f) {
  json j;
  j["domains"] = {{"A", to_json(f.domain_a())},
                  {"B", to_json(f.domain_b())},
                  {"C", to_json(f.domain_c())},
                  {"U", to_json(f.domain_u())}};
  json table = json::array();
  for (auto v : f.table()) table.push_back(static_cast<int>(v));
  j["table"] = std::move(table);
  return j;
}

ValueSet value_set_from_json(const json& j) {
  const auto var = get<std::string>(j, "variable", "value set");
  if (j.contains("threshold"))
    return ValueSet::above(var, get<double>(j, "threshold", "value set"));
  if (j.contains("members"))
    return ValueSet::of(var, get<std::vector<double>>(j, "members", "value set"));
  throw UsageError("value set needs 'threshold' or 'members'");
}

json to_json(const ValueSet& s) {
  json j;
  j["variable"] = s.variable();
  if (s.threshold())
    j["threshold"] = *s.threshold();
  else
    j["members"] = s.members();
  j["describe"] = s.describe();
  return j;
}

adag::Adag adag_from_json(const json& j) {
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges"))
    throw UsageError("graph needs 'nodes' and 'edges'");
  std::vector<adag::Node> nodes;
  for (const auto& n : j.at("nodes")) {
    adag::Node node;
    if (n.is_string()) {
      node.id = n.get<std::string>();
    } else {
      node.id = get<std::string>(n, "id", "node");
      const auto kind = n.value("kind", std::string("variable"));
      if (kind == "regime") {
        node.kind = adag::NodeKind::regime;
        node.governs = get<std::string>(n, "governs", "regime node " + node.id);
      } else if (kind != "variable") {
        throw UsageError("node " + node.id + ": unknown kind '" + kind + "'");
      }
    }
    nodes.push_back(std::move(node));
  }
  std::vector<adag::Edge> edges;
  for (const auto& e : j.at("edges")) {
    if (e.is_array() && e.size() == 2 && e[0].is_string() && e[1].is_string())
      edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    else if (e.is_object())
      edges.emplace_back(get<std::string>(e, "from", "edge"), get<std::string>(e, "to", "edge"));
    else
      throw UsageError("edges must be [from, to] pairs or {from, to} objects");
  }
  return adag::Adag(std::move(nodes), std::move(edges));
}

json to_json(const adag::Adag& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes()) {
    json o{{"id", n.id}, {"kind", n.kind == adag::NodeKind::regime ? "regime" : "variable"}};
    if (n.kind == adag::NodeKind::regime) o["governs"] = n.governs;
    nodes.push_back(std::move(o));
  }
  json edges = json::array();
  for (const auto& [from, to] : g.edges()) edges.push_back({from, to});
  return {{"nodes", nodes}, {"edges", edges}};
}

simulator::Scenario scenario_from_json(const json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw UsageError("scenario must be a JSON object");
  std::optional<ResponseFunction> f;
  if (j.contains("response")) {
    f = response_from_json(j.at("response"));
  } else if (j.contains("response_file")) {
    std::filesystem::path p = get<std::string>(j, "response_file", "scenario");
    if (p.is_relative() && !base.empty()) p = base / p;
    f = response_from_json(read_file(p));
  } else if (j.contains("domains")) {
    f = response_from_json(j);
  } else {
    throw UsageError("scenario needs 'response', 'response_file', or inline 'domains'/'table'");
  }

  simulator::Scenario s{*f, {}, {}, {}, {}, {}};
  const std::string where = "scenario";
  s.p_c = j.contains("p_c") ? get<std::vector<double>>(j, "p_c", where) : std::vector<double>{1.0};
  s.p_u_given_c = conditional(j, "p_u_given_c", where);
  s.p_a_given_c = conditional(j, "p_a_given_c", where);
  s.p_b_given_c = conditional(j, "p_b_given_c", where);
  if (j.contains("regime")) {
    const auto& r = j.at("regime");
    if (r.is_string()) {
      if (r.get<std::string>() != "observational")
        throw UsageError("regime must be \"observational\" or {\"a\": .., \"b\": ..}");
    } else if (r.is_object() && r.contains("a") && r.contains("b")) {
      s.regime = simulator::Regime::intervene(level_from_json(f->domain_a(), r.at("a")),
                                              level_from_json(f->domain_b(), r.at("b")));
    } else {
      throw UsageError("regime must be \"observational\" or {\"a\": .., \"b\": ..}");
    }
  }
  s.validate();
  return s;
}

json to_json(const simulator::Scenario& s) {
  json j;
  j["response"] = to_json(s.response);
  j["p_c"] = s.p_c;
  j["p_u_given_c"] = s.p_u_given_c;
  j["p_a_given_c"] = s.p_a_given_c;
  j["p_b_given_c"] = s.p_b_given_c;
  if (s.regime.observational)
    j["regime"] = "observational";
  else
    j["regime"] = {{"a", level(s.response.domain_a(), s.regime.a)},
                   {"b", level(s.response.domain_b(), s.regime.b)}};
  return j;
}

std::optional<simulator::Dichotomy> dichotomy_from_json(const json& scenario) {
  if (!scenario.contains("dichotomy")) return std::nullopt;
  const auto& d = scenario.at("dichotomy");
  if (!d.contains("alpha") || !d.contains("beta"))
    throw UsageError("dichotomy needs 'alpha' and 'beta'");
  return simulator::Dichotomy{value_set_from_json(d.at("alpha")),
                              value_set_from_json(d.at("beta"))};
}

// ---------------------------------------------------------------------------
// Mechanism results

namespace {

json context_json(const ResponseFunction& f, mechanism::Context ctx) {
  return {{f.domain_c().name(), level(f.domain_c(), ctx.c)},
          {f.domain_u().name(), level(f.domain_u(), ctx.u)}};
}

}  // namespace

json to_json(const ResponseFunction& f, const mechanism::InterferenceWitness& w) {
  const auto& actor = f.domain(w.actor);
  const auto& responder = f.domain(mechanism::other(w.actor));
  json j;
  j["actor"] = mechanism::to_string(w.actor);
  j["context"] = context_json(f, w.context);
  j["blocking"] = level(actor, w.blocking);
  j["pivot"] = level(actor, w.pivot);
  j["responder_off"] = level(responder, w.responder_off);
  j["responder_on"] = level(responder, w.responder_on);
  return j;
}

json to_json(const ResponseFunction& f, const mechanism::CoactionVerdict& v) {
  json j;
  j["a_interferes_with_b"] = v.a_interferes_with_b;
  j["b_interferes_with_a"] = v.b_interferes_with_a;
  j["weak"] = v.weak;
  j["strong"] = v.strong;
  json w = json::array();
  for (const auto& x : v.witnesses) w.push_back(to_json(f, x));
  j["witnesses"] = std::move(w);
  return j;
}

json to_json(const mechanism::BooleanPattern& p) {
  return {{"id", p.id},
          {"class", mechanism::to_string(p.kind)},
          {"truth", {p.truth[0], p.truth[1], p.truth[2], p.truth[3]}},
          {"formula", p.formula}};
}

json to_json(const ResponseFunction& f, const mechanism::ProofWitness& w) {
  const auto& a = f.domain_a();
  const auto& b = f.domain_b();
  return {{"context", context_json(f, w.context)},
          {"a1", level(a, w.a1)}, {"b1", level(b, w.b1)}, {"b2", level(b, w.b2)},
          {"a2", level(a, w.a2)}, {"a3", level(a, w.a3)}, {"b3", level(b, w.b3)},
          {"excess", number(w.excess)}};
}

// ---------------------------------------------------------------------------
// Graph results

json to_json(const adag::ConditionVerdict& v) {
  json j;
  j["number"] = v.number;
  j["statement"] = v.statement;
  j["status"] = adag::to_string(v.status);
  j["asserted"] = v.asserted;
  j["active_path"] = v.active_path;
  return j;
}

json to_json(const adag::ConditionReport& r) {
  json j;
  j["roles"] = {{"A", r.roles.a}, {"B", r.roles.b}, {"Y", r.roles.y},
                {"C", r.roles.c}, {"U", r.roles.u},
                {"asserted_functional", r.roles.asserted_functional}};
  j["sigma"] = r.sigma;
  json conds = json::array();
  for (const auto& c : r.conditions) conds.push_back(to_json(c));
  j["conditions"] = std::move(conds);
  j["corollary"] = to_json(r.corollary);
  j["graph_conditions_hold"] = r.graph_conditions_hold();
  j["internal_error"] = r.internal_error;
  if (r.internal_error) j["internal_error_message"] = r.internal_error_message;
  return j;
}

json to_json(const adag::SufficiencyResult& r) {
  return {{"holds", r.holds}, {"failed_clause", r.failed_clause}, {"active_path", r.active_path}};
}

// ---------------------------------------------------------------------------
// Estimation results

json to_json(const estimation::AssumptionChecklist& list) {
  json a = json::array();
  for (const auto& item : list)
    a.push_back({{"name", item.name}, {"status", estimation::to_string(item.status)},
                 {"note", item.note}});
  return a;
}

json to_json(const estimation::RiskTable& t) {
  json cells = json::array();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const auto& c = t.cells[i][j];
      if (!c) continue;
      cells.push_back({{"alpha", i}, {"beta", j}, {"estimate", number(c->estimate)},
                       {"se", number(c->se)}, {"count", c->count}, {"low_count", c->low_count}});
    }
  return {{"stratum", t.stratum}, {"cells", cells}};
}

json to_json(const estimation::TestResult& r) {
  json j;
  j["method"] = r.method;
  j["statistic"] = number(r.statistic);
  j["se"] = number(r.se);
  j["z"] = number(r.z);
  j["p_value"] = number(r.p_value);
  j["cells"] = {{"R11", number(r.cells[0])}, {"R10", number(r.cells[1])},
                {"R01", number(r.cells[2])}};
  j["dichotomization"] = r.dichotomization;
  if (r.interval) {
    j["interval"] = {{"lower", number(r.interval->first)}, {"upper", number(r.interval->second)},
                     {"level", r.interval_level}};
  }
  j["notes"] = r.notes;
  return j;
}

json to_json(const estimation::ModelFit& f) {
  json coefs = json::array();
  for (std::size_t i = 0; i < f.names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    coefs.push_back({{"name", f.names[i]}, {"estimate", number(f.coef(k))},
                     {"se", number(std::sqrt(f.cov(k, k)))}});
  }
  json cov = json::array();
  for (Eigen::Index r = 0; r < f.cov.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < f.cov.cols(); ++c) row.push_back(number(f.cov(r, c)));
    cov.push_back(std::move(row));
  }
  const auto& d = f.diagnostics;
  json j;
  j["link"] = estimation::to_string(f.link);
  j["n"] = f.n;
  j["coefficients"] = std::move(coefs);
  j["covariance"] = std::move(cov);
  j["diagnostics"] = {{"converged", d.converged},
                      {"iterations", d.iterations},
                      {"active_constraints", d.active_constraints},
                      {"min_fitted", number(d.min_fitted)},
                      {"max_fitted", number(d.max_fitted)},
                      {"log_likelihood", number(d.log_likelihood)},
                      {"covariance_from", d.observed_information ? "observed" : "expected"}};
  return j;
}

// ---------------------------------------------------------------------------
// Simulator results

json to_json(const simulator::ExactRiskTable& t) {
  json strata = json::array();
  for (std::size_t c = 0; c < t.by_c.size(); ++c) {
    const auto& r = t.by_c[c];
    json by_u = json::array();
    for (std::size_t u = 0; u < t.by_cu[c].size(); ++u) {
      const auto& q = t.by_cu[c][u];
      by_u.push_back({{"u", u}, {"R00", q[0][0]}, {"R01", q[0][1]}, {"R10", q[1][0]},
                      {"R11", q[1][1]}, {"excess", t.excess(c, u)}});
    }
    strata.push_back({{"c", c}, {"R00", r[0][0]}, {"R01", r[0][1]}, {"R10", r[1][0]},
                      {"R11", r[1][1]}, {"excess", t.excess(c)}, {"by_u", by_u}});
  }
  return strata;
}

json to_json(const simulator::SoundnessReport& r) {
  json reasons = json::object();
  for (const auto& [why, count] : r.skip_reasons) reasons[why] = count;
  json ces = json::array();
  for (const auto& c : r.counterexamples)
    ces.push_back({{"trial", c.trial}, {"stratum", c.stratum}, {"excess", c.excess},
                   {"claim", c.claim}});
  json j;
  j["trials"] = r.trials;
  j["evaluated"] = r.evaluated;
  j["skipped"] = r.skipped;
  j["skip_reasons"] = std::move(reasons);
  j["positives"] = r.positives;
  j["claims"] = r.claims;
  j["confirmed"] = r.confirmed;
  j["counterexamples"] = std::move(ces);
  return j;
}

}  // namespace coact::json_io
