#include <doctest.h>

#include <cmath>

#include "coact/errors.hpp"
#include "coact/estimation.hpp"
#include "coact/json_io.hpp"
#include "coact/simulator.hpp"
#include "oracles.hpp"

using namespace coact;
using namespace coact::simulator;
using mechanism::VariableDomain;

namespace {

VariableDomain levels(const std::string& name, std::size_t k) {
  std::vector<double> v(k);
  for (std::size_t i = 0; i < k; ++i) v[i] = static_cast<double>(i);
  return VariableDomain(name, v);
}

Scenario fixture_scenario(const std::string& name) {
  auto path = std::filesystem::path(COACT_DATA_DIR) / name;
  return json_io::scenario_from_json(json_io::read_file(path), path.parent_path());
}

Dichotomy fixture_dichotomy(const std::string& name) {
  auto path = std::filesystem::path(COACT_DATA_DIR) / name;
  return *json_io::dichotomy_from_json(json_io::read_file(path));
}

Scenario uniform(ResponseFunction f) {
  auto nc = f.domain_c().size(), nu = f.domain_u().size();
  auto na = f.domain_a().size(), nb = f.domain_b().size();
  Scenario s{std::move(f),
             std::vector<double>(nc, 1.0 / static_cast<double>(nc)),
             std::vector<std::vector<double>>(nc, std::vector<double>(nu, 1.0 / static_cast<double>(nu))),
             std::vector<std::vector<double>>(nc, std::vector<double>(na, 1.0 / static_cast<double>(na))),
             std::vector<std::vector<double>>(nc, std::vector<double>(nb, 1.0 / static_cast<double>(nb))),
             {}};
  return s;
}

}  // namespace

TEST_CASE("trivial scenarios") {
  auto always = ResponseFunction::tabulate(levels("A", 2), levels("B", 2),
                                           VariableDomain::singleton("C"), levels("U", 2),
                                           [](auto, auto, auto, auto) { return true; });
  Dichotomy d{mechanism::ValueSet::above("A", 0), mechanism::ValueSet::above("B", 0)};
  auto t = exact_risk(uniform(always), d);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(t.by_c[0][i][j] == 1.0);

  auto conj = ResponseFunction::tabulate(levels("A", 2), levels("B", 2),
                                         VariableDomain::singleton("C"), levels("U", 2),
                                         [](auto a, auto b, auto, auto) { return a && b; });
  auto u = exact_risk(uniform(conj), d);
  CHECK(u.excess(0) == 1.0);
  CHECK(u.by_c[0][1][0] == 0.0);
}

TEST_CASE("fixture scenarios: exact risks") {
  auto s = fixture_scenario("and_scenario.json");
  auto d = fixture_dichotomy("and_scenario.json");
  auto t = exact_risk(s, d);
  CHECK(t.excess(0) == doctest::Approx(0.7));
  CHECK(t.excess(1) == doctest::Approx(0.4));
  CHECK(t.excess(0, 1) == 1.0);

  auto l = fixture_scenario("logical_scenario.json");
  auto ld = fixture_dichotomy("logical_scenario.json");
  auto lt = exact_risk(l, ld);
  // alpha = {2}, beta = {1}: R11 = 1, R10 = 1, R01 = 1/2.
  CHECK(lt.excess(0) == doctest::Approx(1.0 - 1.0 - 0.5));
}

TEST_CASE("property: mixture identity and the joint-enumeration oracle") {
  auto gen = monotone_scenario_generator({});
  for (std::uint64_t k = 0; k < 300; ++k) {
    rng::Stream stream(77, "scenario", k);
    auto g = gen(stream);
    auto t = exact_risk(g.scenario, g.dichotomy);
    const auto& s = g.scenario;
    for (std::size_t c = 0; c < s.p_c.size(); ++c)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          double mix = 0;
          for (std::size_t u = 0; u < s.p_u_given_c[c].size(); ++u)
            mix += s.p_u_given_c[c][u] * t.by_cu[c][u][i][j];
          REQUIRE(std::abs(mix - t.by_c[c][i][j]) < 1e-12);
          double ref = oracle::joint_cell_risk(s, g.dichotomy.alpha, g.dichotomy.beta, i, j, c);
          REQUIRE(std::abs(ref - t.by_c[c][i][j]) < 1e-12);
          REQUIRE(t.by_c[c][i][j] >= 0);
          REQUIRE(t.by_c[c][i][j] <= 1);
        }
  }
}

TEST_CASE("property: regime invariance under the core conditions") {
  auto gen = monotone_scenario_generator({});
  for (std::uint64_t k = 0; k < 200; ++k) {
    rng::Stream stream(78, "scenario", k);
    auto g = gen(stream);
    const auto& s = g.scenario;
    const auto& f = s.response;
    for (std::size_t c = 0; c < s.p_c.size(); ++c)
      for (std::size_t a = 0; a < f.domain_a().size(); ++a)
        for (std::size_t b = 0; b < f.domain_b().size(); ++b) {
          if (s.p_a_given_c[c][a] == 0 || s.p_b_given_c[c][b] == 0) continue;
          REQUIRE(std::abs(observational_conditional_risk(s, a, b, c) -
                           interventional_risk(s, a, b, c)) < 1e-12);
        }
  }
}

TEST_CASE("sampling matches exact risks within three standard errors") {
  auto s = fixture_scenario("and_scenario.json");
  auto d = fixture_dichotomy("and_scenario.json");
  auto t = exact_risk(s, d);
  auto data = sample_dataset(s, 100000, 5);
  CHECK(data.rows() == 100000);
  CHECK(data.has("C"));
  CHECK_FALSE(data.has("U"));
  for (std::size_t c = 0; c < 2; ++c)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double n = 0, y = 0;
        for (std::size_t r = 0; r < data.rows(); ++r) {
          if (data.values("C")[r] != static_cast<double>(c)) continue;
          if (d.alpha.contains(data.values("A")[r]) != (i == 1)) continue;
          if (d.beta.contains(data.values("B")[r]) != (j == 1)) continue;
          ++n;
          y += data.values("Y")[r];
        }
        double p = t.by_c[c][i][j];
        double se = std::sqrt(std::max(p * (1 - p), 1e-12) / n);
        INFO("c=" << c << " i=" << i << " j=" << j);
        CHECK(std::abs(y / n - p) <= 3 * se + 1e-12);
      }
}

TEST_CASE("sampling is seeded and honours interventions") {
  auto s = fixture_scenario("and_scenario.json");
  auto one = sample_dataset(s, 500, 1);
  auto again = sample_dataset(s, 500, 1);
  auto other = sample_dataset(s, 500, 2);
  CHECK(estimation::to_csv(one) == estimation::to_csv(again));
  CHECK(estimation::to_csv(one) != estimation::to_csv(other));

  s.regime = Regime::intervene(1, 0);
  auto forced = sample_dataset(s, 300, 3, true);
  CHECK(forced.has("U"));
  for (std::size_t r = 0; r < forced.rows(); ++r) {
    REQUIRE(forced.values("A")[r] == 1);
    REQUIRE(forced.values("B")[r] == 0);
    REQUIRE(forced.values("Y")[r] == 0);
  }
  CHECK_THROWS_AS(exact_risk(s, fixture_dichotomy("and_scenario.json")), UsageError);
}

TEST_CASE("scenario validation") {
  auto s = fixture_scenario("and_scenario.json");
  s.p_c = {0.5, 0.6};
  CHECK_THROWS_AS(s.validate(), UsageError);
  s = fixture_scenario("and_scenario.json");
  s.p_a_given_c[0] = {1.0};
  CHECK_THROWS_AS(s.validate(), UsageError);
  s = fixture_scenario("and_scenario.json");
  s.regime = Regime::intervene(5, 0);
  CHECK_THROWS_AS(s.validate(), UsageError);

  s = fixture_scenario("and_scenario.json");
  s.p_a_given_c[0] = {1.0, 0.0};
  CHECK_THROWS_AS(exact_risk(s, fixture_dichotomy("and_scenario.json")), DegenerateError);
}

TEST_CASE("soundness: no counterexamples and worker independence") {
  auto gen = monotone_scenario_generator({});
  auto one = soundness_experiment(gen, 300, 12, 1);
  auto four = soundness_experiment(gen, 300, 12, 4);
  CHECK(one.counterexamples.empty());
  CHECK(one.skipped == 0);
  CHECK(one.positives > 0);
  CHECK(one.confirmed == one.claims);
  CHECK(json_io::to_json(one).dump() == json_io::to_json(four).dump());
}

TEST_CASE("soundness: precondition gate skips non-monotone scenarios") {
  GeneratorOptions opt;
  opt.blocks = GeneratorOptions::Blocks::threshold;
  opt.non_monotone_rate = 1.0;
  auto r = soundness_experiment(monotone_scenario_generator(opt), 200, 3, 2);
  CHECK(r.skipped > 0);
  CHECK(r.skip_reasons.size() >= 1);
  CHECK(r.evaluated + r.skipped == r.trials);
  CHECK(r.counterexamples.empty());
}

TEST_CASE("property: generated scenarios meet the stated preconditions") {
  GeneratorOptions opt;
  opt.blocks = GeneratorOptions::Blocks::threshold;
  auto gen = monotone_scenario_generator(opt);
  for (std::uint64_t k = 0; k < 300; ++k) {
    rng::Stream stream(4, "scenario", k);
    auto g = gen(stream);
    const auto& f = g.scenario.response;
    using mechanism::Factor;
    using mechanism::Monotonicity;
    auto ma = mechanism::check_monotonicity(f, Factor::A);
    auto mb = mechanism::check_monotonicity(f, Factor::B);
    REQUIRE((ma == Monotonicity::non_decreasing || ma == Monotonicity::constant));
    REQUIRE((mb == Monotonicity::non_decreasing || mb == Monotonicity::constant));
    REQUIRE(mechanism::check_alpha_insensitivity(f, Factor::A, g.dichotomy.alpha));
    REQUIRE(mechanism::check_alpha_insensitivity(f, Factor::B, g.dichotomy.beta));
    g.scenario.validate();
  }
}
