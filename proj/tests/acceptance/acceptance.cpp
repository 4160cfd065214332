// Acceptance suite: one PASS/FAIL line per criterion, with the elapsed time
// against its limit. Exit status is non-zero only for unexpected failures;
// criteria listed in kKnownFailures print FAIL but are documented as
// unattainable as stated.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "coact/adag.hpp"
#include "coact/cli.hpp"
#include "coact/errors.hpp"
#include "coact/estimation.hpp"
#include "coact/json_io.hpp"
#include "coact/mechanism.hpp"
#include "coact/simulator.hpp"
#include "oracles.hpp"

using namespace coact;
namespace fs = std::filesystem;

namespace {

// Criterion 1 asks for mutual interference in all six interdependent binary
// patterns; XOR and XNOR have no level that forces Y = 0, so the interference
// definition cannot hold for them.
const std::set<int> kKnownFailures = {1};

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Checks {
public:
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      if (!failed_.empty()) failed_ += "; ";
      failed_ += what;
    }
  }
  Outcome done(std::string summary) const {
    return {pass_, pass_ ? std::move(summary) : summary + " | failed: " + failed_};
  }

private:
  bool pass_ = true;
  std::string failed_;
};

std::string data(const std::string& name) { return std::string(COACT_DATA_DIR) + "/" + name; }

mechanism::ResponseFunction load_response(const std::string& name) {
  return json_io::response_from_json(json_io::read_file(data(name)));
}

adag::Adag load_graph(const std::string& name) {
  return json_io::adag_from_json(json_io::read_file(data(name)));
}

// ---- 1 ---------------------------------------------------------------------

Outcome worked_examples() {
  using namespace mechanism;
  Checks c;
  auto logical = load_response("logical.json");
  auto v = classify_coaction(logical);
  c.expect(v.a_interferes_with_b, "logical: A interferes with B");
  c.expect(!v.b_interferes_with_a, "logical: B does not interfere with A");
  c.expect(v.weak && !v.strong, "logical: weak, not strong");

  auto circuit = load_response("circuit.json");
  std::size_t closed = 0;
  for (std::size_t u = 0; u < circuit.domain_u().size(); ++u)
    if (circuit.domain_u().label(u) == "CLOSED") closed = u;
  auto w = check_interference(circuit, Factor::A);
  c.expect(w.holds && w.witness && w.witness->context.u == closed,
           "circuit: A interferes with B at U=CLOSED");

  int irrelevance = 0, disjunctive = 0, interdependent = 0, mutual = 0;
  std::string non_mutual;
  for (int id = 1; id <= 16; ++id) {
    auto p = boolean_pattern(id);
    switch (p.kind) {
      case PatternClass::irrelevance: ++irrelevance; break;
      case PatternClass::disjunctive: ++disjunctive; break;
      case PatternClass::interdependent: {
        ++interdependent;
        ResponseFunction f(VariableDomain("A", {0, 1}), VariableDomain("B", {0, 1}),
                           VariableDomain::singleton("C"), VariableDomain::singleton("U"),
                           {p.truth.begin(), p.truth.end()});
        if (classify_coaction(f).strong)
          ++mutual;
        else
          non_mutual += std::string(non_mutual.empty() ? "" : ", ") + p.formula;
        break;
      }
    }
  }
  c.expect(irrelevance == 6 && disjunctive == 4 && interdependent == 6, "census 6/4/6");
  c.expect(mutual == 6, "mutual interference in " + std::to_string(mutual) +
                            "/6 interdependent patterns (none for " + non_mutual + ")");
  std::ostringstream os;
  os << "census " << irrelevance << "/" << disjunctive << "/" << interdependent
     << ", mutual interference " << mutual << "/6";
  return c.done(os.str());
}

// ---- 2 ---------------------------------------------------------------------

Outcome graph_verdicts() {
  using namespace adag;
  Checks c;
  auto roles = [](NodeSet cset, NodeSet u) {
    RoleAssignment r{"A", "B", "Y", std::move(cset), std::move(u), false};
    return r;
  };
  auto r1b = check_core_conditions(load_graph("independent_factors.json"), roles({}, {"V"}));
  c.expect(r1b.graph_conditions_hold(), "1b holds at C={}");
  auto r1c = check_core_conditions(load_graph("factor_edge.json"), roles({}, {"V"}));
  c.expect(r1c.conditions[3].status == Status::fails, "1c condition 4 fails");
  auto g3a = load_graph("shared_cause.json");
  c.expect(check_core_conditions(g3a, roles({"Z"}, {"U"})).graph_conditions_hold(),
           "3a holds at C={Z}");
  auto r3b = check_core_conditions(load_graph("confounded_factor.json"), roles({}, {"U"}));
  c.expect(r3b.conditions[2].status == Status::fails, "3b condition 3 fails");
  auto s3c = check_sufficient_covariate(load_graph("mediator.json"), roles({"Z"}, {"U"}), {"Z"});
  c.expect(!s3c.holds && s3c.failed_clause == 1, "3c first sufficiency clause fails");
  auto r3d = check_core_conditions(load_graph("mediator_collider.json"), roles({"Z"}, {"U"}));
  c.expect(r3d.conditions[2].status == Status::fails, "3d condition 3 fails");
  return c.done("six reference graph verdicts");
}

// ---- 3 ---------------------------------------------------------------------

Outcome dsep_equivalence() {
  rng::Stream rng(2024, "acceptance-dsep");
  std::size_t queries = 0, disagreements = 0;
  const int graphs = 200;
  for (int t = 0; t < graphs; ++t) {
    std::size_t n = 2 + rng.below(7);  // 2..8 nodes
    auto plain = oracle::random_dag(rng, n, 0.15 + 0.5 * rng.uniform());
    auto g = oracle::to_adag(plain);
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = x + 1; y < n; ++y)
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
          if ((mask >> x & 1) || (mask >> y & 1)) continue;
          std::vector<char> xs(n, 0), ys(n, 0), zs(n, 0);
          xs[x] = ys[y] = 1;
          adag::NodeSet z;
          for (std::size_t k = 0; k < n; ++k)
            if (mask >> k & 1) {
              zs[k] = 1;
              z.push_back("n" + std::to_string(k));
            }
          bool fast = adag::d_separated(g, {"n" + std::to_string(x)}, {"n" + std::to_string(y)}, z);
          disagreements += fast != oracle::d_separated(plain, xs, ys, zs);
          ++queries;
        }
  }
  std::ostringstream os;
  os << graphs << " DAGs, " << queries << " triples, " << disagreements << " disagreements";
  return {disagreements == 0, os.str()};
}

// ---- 4 ---------------------------------------------------------------------

Outcome regime_corollary() {
  rng::Stream rng(7, "acceptance-corollary");
  std::size_t qualifying = 0, attempts = 0, violations = 0, oracle_mismatch = 0;
  while (qualifying < 500 && attempts < 200000) {
    ++attempts;
    std::size_t n = 4 + rng.below(5);  // variables
    auto plain = oracle::random_dag(rng, n, 0.1 + 0.4 * rng.uniform());
    // Pick distinct roles among the variables; everything else goes to C, U
    // or stays unassigned.
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    for (std::size_t k = n; k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
    std::size_t a = order[0], b = order[1], y = order[2];
    std::vector<std::size_t> cs, us;
    for (std::size_t k = 3; k < n; ++k) {
      auto r = rng.below(3);
      if (r == 0) cs.push_back(order[k]);
      if (r == 1) us.push_back(order[k]);
    }
    // Regime indicators are nodes n, n+1 pointing into A and B.
    oracle::PlainDag full(n + 2);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) full.edge[i][j] = plain.edge[i][j];
    full.edge[n][a] = full.edge[n + 1][b] = 1;

    std::vector<adag::Node> nodes;
    std::vector<adag::Edge> edges;
    auto id = [&](std::size_t k) {
      if (k == n) return std::string("sigma_A");
      if (k == n + 1) return std::string("sigma_B");
      return "n" + std::to_string(k);
    };
    for (std::size_t k = 0; k < n; ++k) nodes.push_back({id(k)});
    nodes.push_back({"sigma_A", adag::NodeKind::regime, id(a)});
    nodes.push_back({"sigma_B", adag::NodeKind::regime, id(b)});
    for (std::size_t i = 0; i < n + 2; ++i)
      for (std::size_t j = 0; j < n + 2; ++j)
        if (full.edge[i][j]) edges.push_back({id(i), id(j)});
    adag::Adag g(std::move(nodes), std::move(edges));

    adag::RoleAssignment roles{id(a), id(b), id(y), {}, {}, false};
    for (auto k : cs) roles.c.push_back(id(k));
    for (auto k : us) roles.u.push_back(id(k));
    auto report = adag::check_core_conditions(g, roles);
    bool c2 = report.conditions[1].status == adag::Status::holds;
    bool c3 = report.conditions[2].status == adag::Status::holds;

    auto mark = [&](std::initializer_list<std::size_t> singles,
                    const std::vector<std::size_t>& more) {
      std::vector<char> m(n + 2, 0);
      for (auto k : singles) m[k] = 1;
      for (auto k : more) m[k] = 1;
      return m;
    };
    std::vector<char> sigma = mark({n, n + 1}, {});
    std::vector<char> given2 = mark({a, b}, cs);
    for (auto k : us) given2[k] = 1;
    bool o2 = oracle::d_separated(full, mark({y}, {}), sigma, given2);
    bool o3 = us.empty() || oracle::d_separated(full, mark({}, us), mark({a, b, n, n + 1}, {}),
                                                mark({}, cs));
    oracle_mismatch += (c2 != o2) || (c3 != o3);
    if (!(c2 && c3)) continue;
    ++qualifying;
    bool lib = report.corollary.status == adag::Status::holds;
    bool ref = oracle::d_separated(full, mark({y}, {}), sigma, mark({a, b}, cs));
    violations += !lib || !ref;
  }
  std::ostringstream os;
  os << qualifying << " qualifying of " << attempts << " instances, " << violations
     << " corollary violations, " << oracle_mismatch << " condition mismatches";
  return {qualifying >= 500 && violations == 0 && oracle_mismatch == 0, os.str()};
}

// ---- 5 ---------------------------------------------------------------------

bool monotone_nondecreasing(const mechanism::ResponseFunction& f) {
  for (std::size_t c = 0; c < f.domain_c().size(); ++c)
    for (std::size_t u = 0; u < f.domain_u().size(); ++u)
      for (std::size_t a = 0; a < f.domain_a().size(); ++a)
        for (std::size_t b = 0; b < f.domain_b().size(); ++b) {
          if (a + 1 < f.domain_a().size() && f(a, b, c, u) > f(a + 1, b, c, u)) return false;
          if (b + 1 < f.domain_b().size() && f(a, b, c, u) > f(a, b + 1, c, u)) return false;
        }
  return true;
}

Outcome soundness() {
  const std::size_t trials = 1000;
  const std::uint64_t seed = 31337;
  auto gen = simulator::monotone_scenario_generator({});
  auto report = simulator::soundness_experiment(gen, trials, seed, 4);

  // Independent re-check: enumerate S from the full joint law and decide
  // interference from the definition, stratum by stratum.
  std::size_t positives = 0, claims = 0, counterexamples = 0, not_monotone = 0;
  for (std::size_t k = 0; k < trials; ++k) {
    rng::Stream stream(seed, "scenario", k);
    auto g = gen(stream);
    const auto& s = g.scenario;
    if (!monotone_nondecreasing(s.response)) {
      ++not_monotone;
      continue;
    }
    bool any = false;
    for (std::size_t c = 0; c < s.p_c.size(); ++c) {
      auto r = [&](int i, int j) {
        return oracle::joint_cell_risk(s, g.dichotomy.alpha, g.dichotomy.beta, i, j, c);
      };
      double excess = r(1, 1) - r(1, 0) - r(0, 1);
      if (excess <= simulator::kExcessTolerance) continue;
      any = true;
      claims += 2;
      counterexamples += !oracle::interferes(s.response, mechanism::Factor::B, c);
      counterexamples += !oracle::interferes(s.response, mechanism::Factor::A, c);
    }
    positives += any;
  }
  std::ostringstream os;
  os << trials << " trials, " << positives << " with S > 0, " << claims << " claims, "
     << counterexamples << " counterexamples (library: " << report.positives << " positives, "
     << report.counterexamples.size() << " counterexamples, " << report.skipped << " skipped)";
  bool ok = counterexamples == 0 && report.counterexamples.empty() && not_monotone == 0 &&
            report.skipped == 0 && report.positives == positives && report.claims == claims &&
            positives > 0;
  return {ok, os.str()};
}

// ---- 6 ---------------------------------------------------------------------

Outcome coefficient_arithmetic() {
  using namespace estimation;
  Checks c;
  auto trend_fit = ModelFit::from_estimates(Link::linear_risk,
                                         {"alpha", "phi_G1", "phi_S0", "delta_T", "gamma_S0xG1"},
                                         {-2.33, -0.06, 1.41, -0.02, -1.0},
                                         {0.5, 0.19, 0.24, 0.017, 0.33});
  auto coding = standard_cell_coding("alpha", "phi_G1", "phi_S0", "gamma_S0xG1", "delta_T");
  auto s0 = model_excess_risk(trend_fit, coding, 0.0);
  c.expect(std::abs(s0.statistic - 1.33) <= 1e-12, "trend model: interaction - intercept = 1.33");

  // Symbolic expansion: cell (1,1) = (G=1, S=0), (1,0) = (G=1, S=1),
  // (0,1) = (G=0, S=0), each evaluated with the trend at t.
  for (double t : {0.0, 5.0, 12.5, 30.0}) {
    auto w = excess_contrast(trend_fit, coding, t);
    std::vector<double> expected{-1.0, 0.0, 0.0, -t, 1.0};
    for (std::size_t k = 0; k < expected.size(); ++k)
      c.expect(w(static_cast<Eigen::Index>(k)) == expected[k],
               "contrast weight " + trend_fit.names[k] + " at t=" + std::to_string(t));
    auto r = model_excess_risk(trend_fit, coding, t);
    c.expect(std::abs(r.statistic - (-1.0 - (-2.33) - (-0.02) * t)) <= 1e-12,
             "S = gamma - alpha - delta t at t=" + std::to_string(t));
  }

  auto odds_fit = ModelFit::from_estimates(
      Link::linear_odds, {"(Intercept)", "alpha_ind", "beta_ind", "alpha_ind:beta_ind"},
      {0.25, 1.46, 0.07, 0.9}, {0.013, 0.044, 0.056, 0.22});
  auto r3 = rare_disease_excess(odds_fit);
  c.expect(std::abs(r3.statistic - 0.65) <= 1e-12, "odds model: interaction - intercept = 0.65");

  std::ostringstream os;
  os.precision(15);
  os << "trend model S(t=0) = " << s0.statistic << ", odds model S = " << r3.statistic;
  return c.done(os.str());
}

// ---- 7 ---------------------------------------------------------------------

struct Truth {
  std::vector<std::string> names;
  std::vector<double> coef;
};

estimation::Dataset recovery_data(const Truth& t, bool odds, bool trend, std::size_t n,
                                  std::uint64_t rep) {
  rng::Stream s(rep, odds ? "recovery-odds" : "recovery-risk");
  std::vector<double> a(n), b(n), tv(n), y(n);
  for (std::size_t k = 0; k < n; ++k) {
    a[k] = s.bernoulli(0.5);
    b[k] = s.bernoulli(0.5);
    tv[k] = trend ? 30 * s.uniform() : 0;
    double eta = t.coef[0] + t.coef[1] * a[k] + t.coef[2] * b[k] + t.coef[3] * a[k] * b[k];
    if (trend) eta += t.coef[4] * tv[k];
    y[k] = s.bernoulli(odds ? eta / (1 + eta) : eta);
  }
  std::vector<estimation::Column> cols{{estimation::kAlphaColumn, estimation::ColumnType::binary, a},
                                       {estimation::kBetaColumn, estimation::ColumnType::binary, b}};
  if (trend) cols.push_back({"T", estimation::ColumnType::continuous, tv});
  cols.push_back({"Y", estimation::ColumnType::binary, y});
  return estimation::Dataset(std::move(cols), "Y");
}

Outcome recovery() {
  using namespace estimation;
  const std::size_t n = 5000;
  const int reps = 100;
  Truth risk{{"(Intercept)", "alpha_ind", "beta_ind", "alpha_ind:beta_ind", "T"},
             {0.1, 0.15, 0.15, 0.2, 0.002}};
  Truth odds{{"(Intercept)", "alpha_ind", "beta_ind", "alpha_ind:beta_ind"},
             {0.25, 1.46, 0.07, 0.9}};
  int risk_ok = 0, odds_ok = 0, failures = 0;
  for (int rep = 0; rep < reps; ++rep) {
    try {
      auto fit = fit_linear_risk(recovery_data(risk, false, true, n, rep), excess_risk_formula("T"));
      bool all = true;
      for (std::size_t k = 0; k < risk.names.size(); ++k)
        all = all && std::abs(fit.coefficient(risk.names[k]) - risk.coef[k]) <=
                         3 * fit.se(risk.names[k]);
      risk_ok += all;
    } catch (const AnalysisError&) {
      ++failures;
    }
    try {
      auto fit = fit_linear_odds(recovery_data(odds, true, false, n, rep), excess_risk_formula());
      bool all = true;
      for (std::size_t k = 0; k < odds.names.size(); ++k)
        all = all && std::abs(fit.coefficient(odds.names[k]) - odds.coef[k]) <=
                         3 * fit.se(odds.names[k]);
      odds_ok += all;
    } catch (const AnalysisError&) {
      ++failures;
    }
  }
  std::ostringstream os;
  os << "n=" << n << ", linear-risk " << risk_ok << "/" << reps << ", linear-odds " << odds_ok
     << "/" << reps << " replications within 3 SE (fit failures " << failures << ")";
  return {risk_ok >= 95 && odds_ok >= 95, os.str()};
}

// ---- 8 ---------------------------------------------------------------------

Outcome additive_null() {
  using namespace estimation;
  // Additive risks with R00 = 0 put S exactly on the null boundary:
  // R11 - R10 - R01 = 0.5 - 0.2 - 0.3 = 0.
  const double r[2][2] = {{0.0, 0.3}, {0.2, 0.5}};
  const int reps = 500;
  const std::size_t n = 2000;
  int rejections = 0;
  for (int rep = 0; rep < reps; ++rep) {
    rng::Stream s(static_cast<std::uint64_t>(rep), "additive-null");
    std::vector<double> a(n), b(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
      int i = s.bernoulli(0.5), j = s.bernoulli(0.5);
      a[k] = i;
      b[k] = j;
      y[k] = s.bernoulli(r[i][j]);
    }
    Dataset d({{kAlphaColumn, ColumnType::binary, a},
               {kBetaColumn, ColumnType::binary, b},
               {"Y", ColumnType::binary, y}},
              "Y");
    rejections += excess_risk_test(estimate_risk_table(d)).p_value < 0.05;
  }
  std::ostringstream os;
  os << rejections << "/" << reps << " rejections at level 0.05 (limit 7%)";
  return {rejections <= 35, os.str()};
}

// ---- 9 ---------------------------------------------------------------------

std::string cli_json(std::vector<std::string> args, int* code = nullptr) {
  args.insert(args.begin(), "coact");
  args.push_back("--json");
  std::ostringstream out, err;
  int rc = cli::run(args, out, err);
  if (code) *code = rc;
  return out.str();
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  Checks c;
  auto dir = fs::temp_directory_path() / "coact-acceptance";
  fs::create_directories(dir);
  auto csv = (dir / "sim.csv").string();

  int rc = 0;
  auto sim1 = cli_json({"simulate", data("and_scenario.json"), "-n", "2000", "--seed", "17",
                        "--out", csv}, &rc);
  auto bytes1 = file_bytes(csv);
  auto sim2 = cli_json({"simulate", data("and_scenario.json"), "-n", "2000", "--seed", "17",
                        "--out", csv});
  c.expect(rc == 0, "simulate exit 0");
  c.expect(sim1 == sim2 && bytes1 == file_bytes(csv), "simulate repeat");

  std::vector<std::string> test_args{"test", csv, "--a-var", "A", "--b-var", "B", "--alpha", ">0",
                                     "--beta", ">0", "--boot", "300", "--seed", "5"};
  auto with = [&](std::vector<std::string> args, std::vector<std::string> extra) {
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
  };
  auto t1 = cli_json(with(test_args, {"--workers", "1"}), &rc);
  c.expect(rc == 0, "test exit 0");
  auto t3 = cli_json(with(test_args, {"--workers", "3"}));
  auto t1b = cli_json(with(test_args, {"--workers", "1"}));
  c.expect(t1 == t3, "bootstrap workers 1 vs 3");
  c.expect(t1 == t1b, "bootstrap repeat");

  auto riskreg = with(test_args, {"--model", "riskreg"});
  c.expect(cli_json(riskreg) == cli_json(with(riskreg, {"--workers", "2"})), "riskreg bootstrap");

  std::vector<std::string> sound{"soundness", "--trials", "400", "--seed", "99"};
  auto s1 = cli_json(with(sound, {"--workers", "1"}), &rc);
  c.expect(rc == 0, "soundness exit 0");
  auto s4 = cli_json(with(sound, {"--workers", "4"}));
  c.expect(s1 == s4, "soundness workers 1 vs 4");
  c.expect(s1 == cli_json(with(sound, {"--workers", "1"})), "soundness repeat");

  auto threshold = with(sound, {"--blocks", "threshold", "--non-monotone-rate", "0.3"});
  c.expect(cli_json(threshold) == cli_json(with(threshold, {"--workers", "3"})),
           "threshold soundness workers");

  auto m1 = cli_json({"mech", "classify", data("circuit.json")});
  c.expect(m1 == cli_json({"mech", "classify", data("circuit.json")}), "mech classify repeat");
  auto a1 = cli_json({"adag", "check", data("shared_cause.json"), "--C", "Z", "--U", "U", "--pool", "Z"});
  c.expect(a1 == cli_json({"adag", "check", data("shared_cause.json"), "--C", "Z", "--U", "U", "--pool",
                           "Z"}),
           "adag check repeat");
  return c.done("simulate, test (nonparametric and riskreg bootstrap), soundness, mech, adag");
}

struct Criterion {
  int number;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "worked-example fidelity", 1, worked_examples},
      {2, "graph-verdict fidelity", 1, graph_verdicts},
      {3, "d-separation oracle equivalence", 30, dsep_equivalence},
      {4, "regime-independence corollary", 60, regime_corollary},
      {5, "excess-risk soundness", 120, soundness},
      {6, "coefficient arithmetic", 1, coefficient_arithmetic},
      {7, "estimator recovery", 180, recovery},
      {8, "additive-null calibration", 120, additive_null},
      {9, "determinism", 120, determinism},
  };
  int unexpected = 0;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool in_time = secs <= c.limit_s;
    bool pass = o.pass && in_time;
    bool known = !pass && kKnownFailures.count(c.number);
    if (!pass && !known) ++unexpected;
    std::printf("[%s] %d %-34s %8.3fs / %gs  %s%s%s\n", pass ? "PASS" : "FAIL", c.number, c.name,
                secs, c.limit_s, o.detail.c_str(), in_time ? "" : " | over time limit",
                known ? " | known failure, see README" : "");
    std::fflush(stdout);
  }
  std::printf("%d unexpected failure(s)\n", unexpected);
  return unexpected == 0 ? 0 : 1;
}
