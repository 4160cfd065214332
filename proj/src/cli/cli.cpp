#include "coact/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "coact/adag.hpp"
#include "coact/dataset.hpp"
#include "coact/errors.hpp"
#include "coact/json_io.hpp"
#include "coact/mechanism.hpp"
#include "coact/simulator.hpp"

namespace coact::cli {

namespace fs = std::filesystem;
namespace est = estimation;
namespace mech = mechanism;
using est::AssumptionStatus;

namespace {

// ---------------------------------------------------------------------------
// Small parsers

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(sep, start);
    if (end == std::string_view::npos) end = s.size();
    auto part = trim(s.substr(start, end - start));
    if (!part.empty()) out.push_back(std::move(part));
    start = end + 1;
  }
  return out;
}

double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(what + ": '" + s + "' is not a number");
  }
}

/// ">2.5", "{1,3}", "1,3" or "=3".
mech::ValueSet parse_value_set(const std::string& variable, const std::string& text) {
  auto t = trim(text);
  if (t.empty()) throw UsageError("empty set for " + variable);
  if (t[0] == '>') return mech::ValueSet::above(variable, parse_number(trim(t.substr(1)), variable));
  if (t[0] == '=') t = t.substr(1);
  if (t.front() == '{' && t.back() == '}') t = t.substr(1, t.size() - 2);
  std::vector<double> members;
  for (const auto& p : split(t)) members.push_back(parse_number(p, variable));
  if (members.empty()) throw UsageError("empty set for " + variable);
  return mech::ValueSet::of(variable, members);
}

/// "1:4,2:3" -> {1 -> 4, 2 -> 3}
std::map<double, double> parse_recode(const std::string& text) {
  std::map<double, double> m;
  for (const auto& pair : split(text)) {
    auto colon = pair.find(':');
    if (colon == std::string::npos) throw UsageError("recode entry '" + pair + "' needs from:to");
    const double from = parse_number(trim(pair.substr(0, colon)), "recode");
    if (!m.emplace(from, parse_number(trim(pair.substr(colon + 1)), "recode")).second)
      throw UsageError("recode maps a level twice");
  }
  return m;
}

AssumptionStatus parse_status(const std::string& s) {
  if (s == "holds") return AssumptionStatus::holds;
  if (s == "asserted") return AssumptionStatus::asserted;
  if (s == "failed") return AssumptionStatus::failed;
  if (s == "unverified") return AssumptionStatus::unverified;
  throw UsageError("assumption status must be holds, asserted, failed or unverified");
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("COACT_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string_view(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("COACT_SEED='") + env + "' is not an unsigned integer");
  }
  return 0;
}

std::string fmt(double v, int digits = 6) {
  if (std::isnan(v)) return "NA";
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

std::string level_text(const mech::VariableDomain& d, std::size_t i) { return d.label(i); }

void warn_unverified(Report& r) {
  std::vector<std::string> names;
  for (const auto& a : r.assumptions)
    if (a.status == AssumptionStatus::unverified) names.push_back(a.name);
  if (names.empty()) return;
  std::string list;
  for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
  r.warn(warn::unverified_assumptions, "conclusions rest on unverified assumptions: " + list);
}

const char* verdict_word(bool b) { return b ? "yes" : "no"; }

// ---------------------------------------------------------------------------
// mech classify

struct MechOptions {
  std::string file;
  std::string alpha, beta;
};

Report mech_classify(const MechOptions& o, std::ostream* text) {
  Report r;
  r.command = "mech classify";
  r.parameters = {{"file", fs::path(o.file).filename().string()}};
  if (!o.alpha.empty()) r.parameters["alpha"] = o.alpha;
  if (!o.beta.empty()) r.parameters["beta"] = o.beta;
  r.inputs_digest = inputs_digest(r.command, r.parameters, {o.file});

  const auto f = json_io::response_from_json(json_io::read_file(o.file));
  const auto verdict = mech::classify_coaction(f);

  json res;
  res["verdict"] = json_io::to_json(f, verdict);

  json mono, cons;
  json recodings = json::object();
  r.assumptions = est::default_checklist();
  est::set_status(r.assumptions, "core_condition_1", AssumptionStatus::holds,
                  "Y is tabulated as a function of (A, B, C, U)");
  for (auto factor : {mech::Factor::A, mech::Factor::B}) {
    const std::string name = mech::to_string(factor);
    const auto& d = f.domain(factor);
    const bool ordered = d.ordered();
    const auto m = ordered ? mech::check_monotonicity(f, factor) : mech::Monotonicity::none;
    mono[name] = ordered ? json(mech::to_string(m)) : json(nullptr);
    const bool consistent = mech::check_consistency(f, factor);
    cons[name] = consistent;
    if (ordered && m == mech::Monotonicity::none && consistent) {
      if (auto perm = mech::find_monotone_recoding(f, factor)) {
        json levels = json::array();
        for (auto p : *perm) levels.push_back(d.value(p));
        recodings[name] = levels;
      }
    }
    const std::string key = "monotonicity_" + name;
    if (!ordered)
      est::set_status(r.assumptions, key, AssumptionStatus::unverified, "levels are unordered");
    else if (m == mech::Monotonicity::none)
      est::set_status(r.assumptions, key, AssumptionStatus::failed);
    else
      est::set_status(r.assumptions, key, AssumptionStatus::holds, mech::to_string(m));
    if (ordered && m == mech::Monotonicity::none)
      r.warn(warn::not_monotone, "f is not monotone in " + name +
                                     (consistent ? "; a monotone recoding exists" : ""));
  }
  res["monotonicity"] = mono;
  res["consistency"] = cons;
  res["monotone_recodings"] = recodings;

  json insens = json::object();
  auto block = [&](const std::string& text_set, mech::Factor factor, const char* key) {
    if (text_set.empty()) return;
    const auto& d = f.domain(factor);
    const auto set = parse_value_set(d.name(), text_set);
    const bool ok = mech::check_alpha_insensitivity(f, factor, set);
    insens[mech::to_string(factor)] = {{"block", set.describe()}, {"insensitive", ok}};
    est::set_status(r.assumptions, key, ok ? AssumptionStatus::holds : AssumptionStatus::failed,
                    "block " + set.describe());
    if (!ok)
      r.warn(warn::not_insensitive,
             std::string(mech::to_string(factor)) + " is not insensitive on " + set.describe());
  };
  block(o.alpha, mech::Factor::A, "alpha_insensitivity");
  block(o.beta, mech::Factor::B, "beta_insensitivity");
  res["insensitivity"] = insens;

  const bool binary = f.domain_a().size() == 2 && f.domain_b().size() == 2;
  json contexts = json::array();
  for (std::size_t c = 0; c < f.domain_c().size(); ++c)
    for (std::size_t u = 0; u < f.domain_u().size(); ++u) {
      const mech::Context ctx{c, u};
      json e;
      e["C"] = level_text(f.domain_c(), c);
      e["U"] = level_text(f.domain_u(), u);
      e["A_irrelevant"] = mech::check_irrelevance(f, mech::Factor::A, ctx);
      e["B_irrelevant"] = mech::check_irrelevance(f, mech::Factor::B, ctx);
      if (binary) e["pattern"] = json_io::to_json(mech::classify_boolean_pattern(f, ctx));
      contexts.push_back(std::move(e));
    }
  res["contexts"] = std::move(contexts);
  r.result = std::move(res);

  if (text) {
    auto& out = *text;
    out << "coact mech classify " << o.file << "\n\n";
    out << "A interferes with B: " << verdict_word(verdict.a_interferes_with_b) << '\n';
    out << "B interferes with A: " << verdict_word(verdict.b_interferes_with_a) << '\n';
    out << "weak coaction:       " << verdict_word(verdict.weak) << '\n';
    out << "strong coaction:     " << verdict_word(verdict.strong) << '\n';
    for (const auto& w : verdict.witnesses) {
      const auto& actor = f.domain(w.actor);
      const auto& resp = f.domain(mech::other(w.actor));
      out << "  witness: " << actor.name() << "=" << level_text(actor, w.blocking)
          << " forces Y=0 at (C=" << level_text(f.domain_c(), w.context.c)
          << ", U=" << level_text(f.domain_u(), w.context.u) << "); at " << actor.name() << "="
          << level_text(actor, w.pivot) << ", " << resp.name() << " moves Y from 0 ("
          << level_text(resp, w.responder_off) << ") to 1 (" << level_text(resp, w.responder_on)
          << ")\n";
    }
    out << "\nmonotonicity: A " << r.result["monotonicity"]["A"].dump() << ", B "
        << r.result["monotonicity"]["B"].dump() << '\n';
    out << "consistency:  A " << verdict_word(cons["A"].get<bool>()) << ", B "
        << verdict_word(cons["B"].get<bool>()) << '\n';
    for (const auto& [k, v] : insens.items())
      out << "insensitivity of " << k << " on " << v["block"].get<std::string>() << ": "
          << verdict_word(v["insensitive"].get<bool>()) << '\n';
    if (binary) {
      out << "\npatterns by context:\n";
      for (const auto& e : r.result["contexts"])
        out << "  C=" << e["C"].get<std::string>() << " U=" << e["U"].get<std::string>()
            << ": #" << e["pattern"]["id"].get<int>() << " "
            << e["pattern"]["formula"].get<std::string>() << " ("
            << e["pattern"]["class"].get<std::string>() << ")\n";
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// adag check

struct AdagOptions {
  std::string file;
  std::string a = "A", b = "B", y = "Y";
  std::string c, u, pool;
  bool assert_functional = false;
};

Report adag_check(const AdagOptions& o, std::ostream* text) {
  Report r;
  r.command = "adag check";
  adag::RoleAssignment roles{o.a, o.b, o.y, split(o.c), split(o.u), o.assert_functional};
  r.parameters = {{"file", fs::path(o.file).filename().string()},
                  {"A", roles.a}, {"B", roles.b}, {"Y", roles.y},
                  {"C", roles.c}, {"U", roles.u},
                  {"assert_functional", roles.asserted_functional}};
  if (!o.pool.empty()) r.parameters["pool"] = split(o.pool);
  r.inputs_digest = inputs_digest(r.command, r.parameters, {o.file});

  const auto g = json_io::adag_from_json(json_io::read_file(o.file));
  const auto report = adag::check_core_conditions(g, roles);
  const auto suff = adag::check_sufficient_covariate(g, roles, roles.c);

  json res;
  res["conditions"] = json_io::to_json(report);
  res["sufficient_covariate"] = json_io::to_json(suff);
  std::vector<adag::NodeSet> admissible;
  if (!o.pool.empty()) {
    admissible = adag::search_admissible_c(g, roles, split(o.pool));
    res["admissible_c"] = admissible;
  }
  r.result = std::move(res);

  r.assumptions = est::default_checklist();
  for (const auto& c : report.conditions) {
    const auto key = "core_condition_" + std::to_string(c.number);
    AssumptionStatus s = AssumptionStatus::unverified;
    if (c.status == adag::Status::holds) s = AssumptionStatus::holds;
    if (c.status == adag::Status::fails) s = AssumptionStatus::failed;
    if (c.status == adag::Status::asserted_only)
      s = c.asserted ? AssumptionStatus::asserted : AssumptionStatus::unverified;
    std::string note = c.statement;
    if (!c.active_path.empty()) note += "; open path " + adag::format_path(g, c.active_path);
    est::set_status(r.assumptions, key, s, note);
  }
  if (!roles.asserted_functional)
    r.warn(warn::functionality_unasserted,
           "core condition 1 is not a graph property; pass --assert-functional to assert it");
  if (report.internal_error) r.warn(warn::internal_error, report.internal_error_message);

  if (text) {
    auto& out = *text;
    auto group = [](const adag::NodeSet& s) {
      std::string t;
      for (const auto& x : s) t += (t.empty() ? "" : ",") + x;
      return "{" + t + "}";
    };
    out << "coact adag check " << o.file << "\n\n";
    out << "roles: A=" << roles.a << " B=" << roles.b << " Y=" << roles.y
        << " C=" << group(roles.c) << " U=" << group(roles.u) << "\n\n";
    for (const auto& c : report.conditions) {
      out << "  condition " << c.number << ": " << std::left << std::setw(14)
          << adag::to_string(c.status) << std::right << c.statement << '\n';
      if (!c.active_path.empty())
        out << "      open path: " << adag::format_path(g, c.active_path) << '\n';
    }
    out << "  corollary:   " << std::left << std::setw(14) << adag::to_string(report.corollary.status)
        << std::right << report.corollary.statement << '\n';
    out << "\ngraph conditions 2-4: " << (report.graph_conditions_hold() ? "hold" : "fail") << '\n';
    out << "C sufficient covariate: " << (suff.holds ? "yes" : "no");
    if (!suff.holds) {
      out << " (clause " << suff.failed_clause;
      if (!suff.active_path.empty()) out << ", open path " << adag::format_path(g, suff.active_path);
      out << ")";
    }
    out << '\n';
    if (!o.pool.empty()) {
      out << "admissible C from pool:";
      if (admissible.empty()) out << " none";
      for (const auto& s : admissible) out << ' ' << group(s);
      out << '\n';
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// test

struct TestOptions {
  std::string data, schema;
  std::string outcome = "Y";
  std::string a_var, b_var, alpha, beta;
  std::string recode_a, recode_b;
  std::string stratum;
  std::string model = "nonparam";
  std::string trend;
  std::optional<double> trend_value;
  int boot = 0;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  std::vector<std::string> assume;
};

est::Dataset load_dataset(const TestOptions& o, std::vector<std::string>& files, json& params) {
  fs::path schema_path = o.schema.empty() ? est::default_schema_path(o.data) : fs::path(o.schema);
  if (fs::exists(schema_path)) {
    files.push_back(schema_path.string());
    params["schema"] = schema_path.filename().string();
    return est::read_csv(o.data, est::schema_from_json(json_io::read_file(schema_path)));
  }
  if (!o.schema.empty()) throw UsageError("cannot open schema '" + o.schema + "'");
  // No sidecar: every header column is numeric, the outcome comes from --outcome.
  std::ifstream in(o.data);
  if (!in) throw UsageError("cannot open '" + o.data + "'");
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  est::Schema s;
  s.outcome = o.outcome;
  for (auto& name : split(header)) {
    if (name.size() >= 2 && name.front() == '"' && name.back() == '"')
      name = name.substr(1, name.size() - 2);
    s.columns.emplace_back(name, name == o.outcome ? est::ColumnType::binary
                                                   : est::ColumnType::continuous);
  }
  params["outcome"] = o.outcome;
  return est::read_csv(o.data, s);
}

void print_test_result(std::ostream& out, const est::TestResult& t, const char* title) {
  out << title << " (" << t.method << ")\n";
  out << "  S = R11 - R10 - R01 = " << fmt(t.cells[0]) << " - " << fmt(t.cells[1]) << " - "
      << fmt(t.cells[2]) << " = " << fmt(t.statistic) << '\n';
  out << "  SE = " << fmt(t.se) << ", z = " << fmt(t.z) << ", one-sided p = " << fmt(t.p_value)
      << '\n';
  if (t.interval)
    out << "  " << fmt(100 * t.interval_level, 3) << "% interval: [" << fmt(t.interval->first)
        << ", " << fmt(t.interval->second) << "]\n";
  for (const auto& n : t.notes) out << "  note: " << n << '\n';
}

Report run_test(const TestOptions& o, std::ostream* text) {
  Report r;
  r.command = "test";
  if (o.model != "nonparam" && o.model != "riskreg" && o.model != "oddsreg")
    throw UsageError("--model must be nonparam, riskreg or oddsreg");
  if (!o.trend.empty() && o.model == "nonparam")
    throw UsageError("--trend needs --model riskreg or oddsreg");
  if (o.trend_value && o.trend.empty()) throw UsageError("--trend-value needs --trend");

  json& p = r.parameters;
  p["data"] = fs::path(o.data).filename().string();
  p["a_var"] = o.a_var;
  p["b_var"] = o.b_var;
  p["alpha"] = o.alpha;
  p["beta"] = o.beta;
  if (!o.recode_a.empty()) p["recode_a"] = o.recode_a;
  if (!o.recode_b.empty()) p["recode_b"] = o.recode_b;
  if (!o.stratum.empty()) p["stratum"] = o.stratum;
  p["model"] = o.model;
  if (!o.trend.empty()) p["trend"] = o.trend;
  if (o.trend_value) p["trend_value"] = *o.trend_value;
  const std::uint64_t seed = o.boot > 0 ? (o.seed ? *o.seed : default_seed()) : 0;
  if (o.boot > 0) {
    p["boot"] = o.boot;
    p["seed"] = seed;
  }
  if (!o.assume.empty()) p["assume"] = o.assume;

  r.assumptions = est::default_checklist();
  for (const auto& a : o.assume) {
    auto eq = a.find('=');
    if (eq == std::string::npos) throw UsageError("--assume takes name=status");
    est::set_status(r.assumptions, trim(a.substr(0, eq)), parse_status(trim(a.substr(eq + 1))),
                    "supplied by the caller");
  }

  std::vector<std::string> files{o.data};
  const auto data = load_dataset(o, files, p);
  r.inputs_digest = inputs_digest(r.command, p, files);

  est::DichotomizationSpec spec{o.a_var, o.b_var, parse_value_set(o.a_var, o.alpha),
                                parse_value_set(o.b_var, o.beta), {}, {}, {}, {}};
  if (!o.recode_a.empty()) spec.recode_a = parse_recode(o.recode_a);
  if (!o.recode_b.empty()) spec.recode_b = parse_recode(o.recode_b);
  if (!o.stratum.empty()) spec.stratum = est::StratumFilter::parse(o.stratum);
  if (!o.trend.empty()) spec.keep.push_back(o.trend);
  const auto dich = est::dichotomize(data, spec);
  const auto& d = dich.data;

  json res;
  res["dichotomization"] = {{"description", dich.description},
                            {"input_rows", dich.input_rows},
                            {"dropped_missing", dich.dropped_missing},
                            {"dropped_stratum", dich.dropped_stratum},
                            {"analysed_rows", d.rows()}};
  if (dich.dropped_missing > 0)
    r.warn(warn::rows_dropped, std::to_string(dich.dropped_missing) +
                                   " rows dropped for missing values (listwise deletion)");

  std::optional<est::RiskTable> table;
  try {
    table = est::estimate_risk_table(d, o.stratum);
  } catch (const EstimationError&) {
    if (o.model == "nonparam") throw;
  }
  if (table) {
    res["risk_table"] = json_io::to_json(*table);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        if (table->cells[i][j]->low_count) {
          r.warn(warn::low_count, "cell R" + std::to_string(i) + std::to_string(j) + " has " +
                                      std::to_string(table->cells[i][j]->count) + " rows");
        }
  }

  est::TestResult result;
  est::Estimator estimator;
  std::optional<est::ModelFit> fit;
  double t = 0;
  if (!o.trend.empty()) {
    if (o.trend_value) {
      t = *o.trend_value;
    } else {
      const auto& v = d.values(o.trend);
      double sum = 0;
      for (double x : v) sum += x;
      t = sum / static_cast<double>(v.size());
    }
  }
  std::optional<std::string> trend_name;
  if (!o.trend.empty()) trend_name = o.trend;
  const auto formula = est::excess_risk_formula(trend_name);
  const std::string ai = est::kAlphaColumn, bi = est::kBetaColumn;
  const auto coding = est::standard_cell_coding("(Intercept)", ai, bi, ai + ":" + bi, trend_name);

  if (o.model == "nonparam") {
    result = est::excess_risk_test(*table);
    estimator = est::nonparametric_estimator();
  } else {
    fit = o.model == "riskreg" ? est::fit_linear_risk(d, formula)
                               : est::fit_linear_odds(d, formula);
    res["fit"] = json_io::to_json(*fit);
    if (o.model == "riskreg") {
      result = est::model_excess_risk(*fit, coding, t);
      estimator = est::linear_risk_estimator(formula, coding, t);
      if (fit->diagnostics.active_constraints > 0)
        r.warn(warn::boundary_fit, std::to_string(fit->diagnostics.active_constraints) +
                                       " fitted risks sit on the [eps, 1-eps] boundary");
    } else {
      result = est::rare_disease_excess(*fit, coding, t);
      estimator = [formula, coding, t](const est::Dataset& x) {
        return est::rare_disease_excess(est::fit_linear_odds(x, formula), coding, t).statistic;
      };
      r.warn(warn::rare_disease,
             "linear-odds contrast: only its sign carries over, under a rare outcome");
    }
    if (!fit->diagnostics.observed_information)
      r.warn(warn::expected_information,
             "observed information was not positive definite; covariance uses expected information");
    if (!o.trend.empty()) res["trend_value"] = t;
  }
  result.dichotomization = dich.description;
  result.assumptions = r.assumptions;
  res["test"] = json_io::to_json(result);

  std::optional<est::TestResult> boot;
  if (o.boot > 0) {
    est::BootstrapOptions bo;
    bo.resamples = o.boot;
    bo.seed = seed;
    bo.workers = o.workers;
    const auto b = est::bootstrap(d, estimator, bo);
    boot = est::bootstrap_test(b, bo);
    boot->dichotomization = dich.description;
    boot->cells = result.cells;
    res["bootstrap"] = json_io::to_json(*boot);
    if (b.failures > 0)
      r.warn(warn::bootstrap_failures,
             std::to_string(b.failures) + " bootstrap resamples failed and were dropped");
  }
  if (!(result.statistic > 0))
    r.warn(warn::no_claim, "S <= 0: the criterion makes no claim about interference");
  warn_unverified(r);
  r.result = std::move(res);

  if (text) {
    auto& out = *text;
    out << "coact test " << o.data << "\n\n";
    out << dich.description << '\n';
    out << "rows: " << dich.input_rows << " read, " << dich.dropped_missing
        << " dropped (missing), " << dich.dropped_stratum << " dropped (stratum), " << d.rows()
        << " analysed\n";
    if (table) {
      out << "\n  cell   n        risk       SE\n";
      for (int i = 1; i >= 0; --i)
        for (int j = 1; j >= 0; --j) {
          const auto& c = *table->cells[i][j];
          out << "  R" << i << j << "    " << std::left << std::setw(8) << c.count << " "
              << std::setw(10) << fmt(c.estimate) << " " << fmt(c.se) << std::right
              << (c.low_count ? "  (low count)" : "") << '\n';
        }
    }
    if (fit) {
      out << "\n" << est::to_string(fit->link) << " fit, n = " << fit->n << ", "
          << fit->diagnostics.iterations << " iterations\n";
      for (std::size_t k = 0; k < fit->names.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        out << "  " << std::left << std::setw(22) << fit->names[k] << std::right << std::setw(12)
            << fmt(fit->coef(i)) << "  (SE " << fmt(std::sqrt(fit->cov(i, i))) << ")\n";
      }
      if (!o.trend.empty()) out << "  trend evaluated at " << fmt(t) << '\n';
    }
    out << '\n';
    print_test_result(out, result, "excess risk");
    if (boot) print_test_result(out, *boot, "bootstrap");
  }
  return r;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::string scenario;
  std::size_t n = 1000;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool include_u = false;
};

Report run_simulate(const SimulateOptions& o, std::ostream* text) {
  Report r;
  r.command = "simulate";
  const std::uint64_t seed = o.seed ? *o.seed : default_seed();
  r.parameters = {{"scenario", fs::path(o.scenario).filename().string()},
                  {"n", o.n},
                  {"seed", seed},
                  {"out", fs::path(o.out).filename().string()},
                  {"include_u", o.include_u}};
  r.inputs_digest = inputs_digest(r.command, r.parameters, {o.scenario});

  const auto j = json_io::read_file(o.scenario);
  const auto s = json_io::scenario_from_json(j, fs::path(o.scenario).parent_path());
  const auto dich = json_io::dichotomy_from_json(j);
  const auto data = simulator::sample_dataset(s, o.n, seed, o.include_u);
  const auto csv = est::to_csv(data);
  {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + o.out + "'");
    f << csv;
  }
  const auto schema_path = est::default_schema_path(o.out);
  {
    std::ofstream f(schema_path, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + schema_path.string() + "'");
    f << est::schema_to_json(est::schema_of(data)).dump(2) << '\n';
  }

  json res;
  res["rows"] = data.rows();
  json cols = json::array();
  for (const auto& c : data.columns()) cols.push_back(c.name);
  res["columns"] = cols;
  res["regime"] = s.regime.observational ? "observational" : "interventional";
  res["output"] = fs::path(o.out).filename().string();
  res["schema"] = schema_path.filename().string();
  res["output_digest"] = fnv1a_hex(csv);

  r.assumptions = est::default_checklist();
  const char* construction = "holds by construction of the scenario model";
  est::set_status(r.assumptions, "core_condition_1", AssumptionStatus::holds, construction);
  est::set_status(r.assumptions, "core_condition_2", AssumptionStatus::holds, construction);
  est::set_status(r.assumptions, "core_condition_3", AssumptionStatus::holds, construction);
  est::set_status(r.assumptions, "core_condition_4", AssumptionStatus::holds, construction);
  for (auto factor : {mech::Factor::A, mech::Factor::B}) {
    const auto m = mech::check_monotonicity(s.response, factor);
    est::set_status(r.assumptions, std::string("monotonicity_") + mech::to_string(factor),
                    m == mech::Monotonicity::none ? AssumptionStatus::failed : AssumptionStatus::holds,
                    mech::to_string(m));
  }
  if (dich) {
    const bool ia = mech::check_alpha_insensitivity(s.response, mech::Factor::A, dich->alpha);
    const bool ib = mech::check_alpha_insensitivity(s.response, mech::Factor::B, dich->beta);
    est::set_status(r.assumptions, "alpha_insensitivity",
                    ia ? AssumptionStatus::holds : AssumptionStatus::failed, dich->alpha.describe());
    est::set_status(r.assumptions, "beta_insensitivity",
                    ib ? AssumptionStatus::holds : AssumptionStatus::failed, dich->beta.describe());
    if (s.regime.observational) {
      const auto exact = simulator::exact_risk(s, *dich);
      res["dichotomy"] = {{"alpha", json_io::to_json(dich->alpha)},
                          {"beta", json_io::to_json(dich->beta)}};
      res["exact_risk"] = json_io::to_json(exact);
    }
  }
  r.result = std::move(res);

  if (text) {
    auto& out = *text;
    out << "coact simulate " << o.scenario << "\n\n";
    out << "wrote " << data.rows() << " rows to " << o.out << " (schema " << schema_path.string()
        << ")\n";
    out << "regime: " << r.result["regime"].get<std::string>() << ", seed " << seed << '\n';
    if (r.result.contains("exact_risk")) {
      out << "\nexact population risks:\n";
      for (const auto& st : r.result["exact_risk"])
        out << "  c=" << st["c"].get<std::size_t>() << "  R11=" << fmt(st["R11"].get<double>())
            << " R10=" << fmt(st["R10"].get<double>()) << " R01=" << fmt(st["R01"].get<double>())
            << " R00=" << fmt(st["R00"].get<double>()) << "  S=" << fmt(st["excess"].get<double>())
            << '\n';
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// soundness

struct SoundnessOptions {
  std::size_t trials = 1000;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  std::string blocks = "singleton";
  double non_monotone_rate = 0.0;
  double flip_rate = 0.0;
};

Report run_soundness(const SoundnessOptions& o, std::ostream* text) {
  Report r;
  r.command = "soundness";
  const std::uint64_t seed = o.seed ? *o.seed : default_seed();
  if (o.blocks != "singleton" && o.blocks != "threshold")
    throw UsageError("--blocks must be singleton or threshold");
  if (!(o.non_monotone_rate >= 0 && o.non_monotone_rate <= 1) ||
      !(o.flip_rate >= 0 && o.flip_rate <= 1))
    throw UsageError("rates must lie in [0, 1]");
  r.parameters = {{"trials", o.trials},
                  {"seed", seed},
                  {"blocks", o.blocks},
                  {"non_monotone_rate", o.non_monotone_rate},
                  {"flip_rate", o.flip_rate}};
  r.inputs_digest = inputs_digest(r.command, r.parameters, {});

  simulator::GeneratorOptions g;
  g.blocks = o.blocks == "threshold" ? simulator::GeneratorOptions::Blocks::threshold
                                     : simulator::GeneratorOptions::Blocks::singleton;
  g.non_monotone_rate = o.non_monotone_rate;
  g.flip_rate = o.flip_rate;
  const auto rep = simulator::soundness_experiment(simulator::monotone_scenario_generator(g),
                                                   o.trials, seed, o.workers);
  r.result = json_io::to_json(rep);

  r.assumptions = est::default_checklist();
  const char* construction = "holds by construction of the scenario model";
  for (const char* k : {"core_condition_1", "core_condition_2", "core_condition_3", "core_condition_4"})
    est::set_status(r.assumptions, k, AssumptionStatus::holds, construction);
  const char* gated = "checked per trial; failing trials are skipped";
  for (const char* k : {"monotonicity_A", "monotonicity_B"})
    est::set_status(r.assumptions, k, AssumptionStatus::holds, gated);
  for (const char* k : {"alpha_insensitivity", "beta_insensitivity"})
    est::set_status(r.assumptions, k, AssumptionStatus::holds,
                    "checked per trial; a claim is tested only for an insensitive block");
  if (rep.skipped > 0)
    r.warn(warn::trials_skipped, std::to_string(rep.skipped) + " trials skipped (preconditions)");
  if (!rep.counterexamples.empty())
    r.warn(warn::counterexamples,
           std::to_string(rep.counterexamples.size()) + " counterexamples to the criterion");

  if (text) {
    auto& out = *text;
    out << "coact soundness\n\n";
    out << "trials:          " << rep.trials << " (seed " << seed << ", " << o.blocks
        << " blocks)\n";
    out << "evaluated:       " << rep.evaluated << '\n';
    out << "skipped:         " << rep.skipped << '\n';
    for (const auto& [why, n] : rep.skip_reasons) out << "  " << why << ": " << n << '\n';
    out << "S > 0:           " << rep.positives << '\n';
    out << "claims checked:  " << rep.claims << '\n';
    out << "confirmed:       " << rep.confirmed << '\n';
    out << "counterexamples: " << rep.counterexamples.size() << '\n';
    for (const auto& c : rep.counterexamples)
      out << "  trial " << c.trial << ", stratum " << c.stratum << ", S = " << fmt(c.excess)
          << ": " << c.claim << " fails\n";
  }
  return r;
}

// ---------------------------------------------------------------------------

const char* error_type(const std::exception& e) {
  if (dynamic_cast<const DomainError*>(&e)) return "DomainError";
  if (dynamic_cast<const UsageError*>(&e)) return "UsageError";
  if (dynamic_cast<const DegenerateError*>(&e)) return "DegenerateError";
  if (dynamic_cast<const EstimationError*>(&e)) return "EstimationError";
  if (dynamic_cast<const FitError*>(&e)) return "FitError";
  if (dynamic_cast<const BootstrapError*>(&e)) return "BootstrapError";
  if (dynamic_cast<const AnalysisError*>(&e)) return "AnalysisError";
  return "Error";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mechanistic interaction (coaction) analysis", "coact"};
  app.require_subcommand(1);
  bool as_json = false;

  auto json_flag = [&](CLI::App* sub) { sub->add_flag("--json", as_json, "Print the report as JSON"); };

  auto* mech_cmd = app.add_subcommand("mech", "Exact checks on a tabulated response function");
  mech_cmd->require_subcommand(1);
  MechOptions mo;
  auto* classify = mech_cmd->add_subcommand("classify", "Interference, coaction, monotonicity");
  classify->add_option("file", mo.file, "Response function JSON")->required()->check(CLI::ExistingFile);
  classify->add_option("--alpha", mo.alpha, "Block of A to check for insensitivity, e.g. \">1\"");
  classify->add_option("--beta", mo.beta, "Block of B to check for insensitivity");
  json_flag(classify);

  auto* adag_cmd = app.add_subcommand("adag", "Core conditions on an augmented DAG");
  adag_cmd->require_subcommand(1);
  AdagOptions ao;
  auto* check = adag_cmd->add_subcommand("check", "Check core conditions 1-4 for a role assignment");
  check->add_option("file", ao.file, "Graph JSON")->required()->check(CLI::ExistingFile);
  check->add_option("--A", ao.a, "First factor")->capture_default_str();
  check->add_option("--B", ao.b, "Second factor")->capture_default_str();
  check->add_option("--Y", ao.y, "Outcome")->capture_default_str();
  check->add_option("--C", ao.c, "Observed context, comma separated (\"\" for none)");
  check->add_option("--U", ao.u, "Unobserved context, comma separated");
  check->add_option("--pool", ao.pool, "Candidate covariates for an admissible-C search");
  check->add_flag("--assert-functional", ao.assert_functional,
                  "Assert that Y is a function of (A, B, C, U)");
  json_flag(check);

  TestOptions to;
  auto* test = app.add_subcommand("test", "Excess-risk test on a CSV dataset");
  test->add_option("data", to.data, "CSV file")->required()->check(CLI::ExistingFile);
  test->add_option("--schema", to.schema, "Schema sidecar (default: <data>.schema.json)");
  test->add_option("--outcome", to.outcome, "Outcome column when there is no schema")
      ->capture_default_str();
  test->add_option("--a-var", to.a_var, "Column of the first factor")->required();
  test->add_option("--b-var", to.b_var, "Column of the second factor")->required();
  test->add_option("--alpha", to.alpha, "Upper block of A, e.g. \">2\" or \"{3}\"")->required();
  test->add_option("--beta", to.beta, "Upper block of B")->required();
  test->add_option("--recode-a", to.recode_a, "Level map applied to A first, e.g. \"1:4,2:3\"");
  test->add_option("--recode-b", to.recode_b, "Level map applied to B first");
  test->add_option("--stratum", to.stratum, "Row filter, e.g. \"A > 1 && I == 1\"");
  test->add_option("--model", to.model, "nonparam, riskreg or oddsreg")->capture_default_str();
  test->add_option("--trend", to.trend, "Linear trend column for the models");
  test->add_option("--trend-value", to.trend_value, "Trend value t (default: sample mean)");
  test->add_option("--boot", to.boot, "Bootstrap resamples (>= 100)");
  test->add_option("--seed", to.seed, "Bootstrap seed (default: $COACT_SEED or 0)");
  test->add_option("--workers", to.workers, "Bootstrap threads")->capture_default_str();
  test->add_option("--assume", to.assume, "Assumption status, e.g. monotonicity_A=asserted");
  json_flag(test);

  SimulateOptions so;
  auto* simulate = app.add_subcommand("simulate", "Sample a dataset from a scenario");
  simulate->add_option("scenario", so.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("-n", so.n, "Rows")->capture_default_str();
  simulate->add_option("--seed", so.seed, "Seed (default: $COACT_SEED or 0)");
  simulate->add_option("--out", so.out, "Output CSV; a schema sidecar is written next to it")
      ->required();
  simulate->add_flag("--include-u", so.include_u, "Also write the unobserved context");
  json_flag(simulate);

  SoundnessOptions sdo;
  auto* sound = app.add_subcommand("soundness", "Randomized soundness experiment");
  sound->add_option("--trials", sdo.trials, "Scenarios")->capture_default_str();
  sound->add_option("--seed", sdo.seed, "Seed (default: $COACT_SEED or 0)");
  sound->add_option("--workers", sdo.workers, "Threads")->capture_default_str();
  sound->add_option("--blocks", sdo.blocks, "singleton or threshold")->capture_default_str();
  sound->add_option("--non-monotone-rate", sdo.non_monotone_rate,
                    "Share of scenarios with one flipped cell")->capture_default_str();
  sound->add_option("--flip-rate", sdo.flip_rate,
                    "Share of scenarios with A reversed")->capture_default_str();
  json_flag(sound);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* ctx = &app;
    for (auto* sub : {mech_cmd, adag_cmd, test, simulate, sound})
      if (sub->parsed()) ctx = sub;
    for (auto* sub : {classify, check})
      if (sub->parsed()) ctx = sub;
    err << ctx->help();
    return kExitUsage;
  }

  std::string command = "coact";
  try {
    std::ostringstream text;
    std::ostream* sink = as_json ? nullptr : &text;
    Report report;
    if (classify->parsed()) {
      command = "mech classify";
      report = mech_classify(mo, sink);
    } else if (check->parsed()) {
      command = "adag check";
      report = adag_check(ao, sink);
    } else if (test->parsed()) {
      command = "test";
      report = run_test(to, sink);
    } else if (simulate->parsed()) {
      command = "simulate";
      report = run_simulate(so, sink);
    } else {
      command = "soundness";
      report = run_soundness(sdo, sink);
    }
    if (as_json) {
      out << report.to_json().dump(2) << '\n';
    } else {
      out << text.str();
      print_assumptions(out, report.assumptions);
      print_warnings(out, report.warnings);
      out << "\ninputs digest: " << report.inputs_digest << '\n';
    }
    return kExitOk;
  } catch (const std::exception& e) {
    const bool analysis = dynamic_cast<const AnalysisError*>(&e) != nullptr;
    const int code = analysis ? kExitAnalysis : kExitUsage;
    err << "error: " << e.what() << '\n';
    if (as_json) {
      json j;
      j["command"] = command;
      j["error"] = {{"type", error_type(e)}, {"message", e.what()}, {"exit_code", code}};
      if (const auto* fe = dynamic_cast<const FitError*>(&e)) j["error"]["trace"] = fe->trace();
      out << j.dump(2) << '\n';
    }
    return code;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  for (const auto& a : args) argv.push_back(a.c_str());
  argv.push_back(nullptr);
  return run(static_cast<int>(args.size()), argv.data(), out, err);
}

}  // namespace coact::cli
