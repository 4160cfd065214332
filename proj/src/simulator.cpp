#include "coact/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "coact/errors.hpp"

namespace coact::simulator {

using mechanism::Factor;
using mechanism::VariableDomain;

namespace {

void check_distribution(const std::vector<double>& p, std::size_t size, const std::string& what) {
  if (p.size() != size) {
    std::ostringstream os;
    os << what << " has " << p.size() << " entries, expected " << size;
    throw UsageError(os.str());
  }
  double total = 0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0) throw UsageError(what + " has a negative or non-finite entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << what << " sums to " << total << ", not 1";
    throw UsageError(os.str());
  }
}

void check_conditional(const std::vector<std::vector<double>>& p, std::size_t strata,
                       std::size_t size, const std::string& what) {
  if (p.size() != strata)
    throw UsageError(what + " needs one row per level of C (" + std::to_string(strata) + ")");
  for (std::size_t c = 0; c < strata; ++c)
    check_distribution(p[c], size, what + "[" + std::to_string(c) + "]");
}

}  // namespace

void Scenario::validate() const {
  const auto& f = response;
  const auto nc = f.domain_c().size();
  check_distribution(p_c, nc, "p_c");
  check_conditional(p_u_given_c, nc, f.domain_u().size(), "p_u_given_c");
  check_conditional(p_a_given_c, nc, f.domain_a().size(), "p_a_given_c");
  check_conditional(p_b_given_c, nc, f.domain_b().size(), "p_b_given_c");
  if (!regime.observational &&
      (regime.a >= f.domain_a().size() || regime.b >= f.domain_b().size()))
    throw UsageError("regime sets A or B to a level outside its domain");
}

double ExactRiskTable::excess(std::size_t c) const {
  const auto& r = by_c.at(c);
  return r[1][1] - r[1][0] - r[0][1];
}

double ExactRiskTable::excess(std::size_t c, std::size_t u) const {
  const auto& r = by_cu.at(c).at(u);
  return r[1][1] - r[1][0] - r[0][1];
}

ExactRiskTable exact_risk(const Scenario& s, const Dichotomy& d) {
  s.validate();
  if (!s.regime.observational)
    throw UsageError("exact_risk is defined under the observational regime");
  const auto& f = s.response;
  const auto na = f.domain_a().size(), nb = f.domain_b().size();
  const auto nc = f.domain_c().size(), nu = f.domain_u().size();

  if (d.alpha.variable() != f.domain_a().name() || d.beta.variable() != f.domain_b().name())
    throw UsageError("dichotomy refers to " + d.alpha.variable() + "/" + d.beta.variable() +
                     ", response has " + f.domain_a().name() + "/" + f.domain_b().name());
  // Level membership per block, index 1 = inside alpha (beta).
  std::vector<int> in_alpha(na, 0), in_beta(nb, 0);
  for (auto a : d.alpha.block_levels(f.domain_a())) in_alpha[a] = 1;
  for (auto b : d.beta.block_levels(f.domain_b())) in_beta[b] = 1;

  ExactRiskTable t;
  t.by_c.resize(nc);
  t.by_cu.assign(nc, std::vector<RiskCells>(nu));
  for (std::size_t c = 0; c < nc; ++c) {
    double mass_a[2] = {0, 0}, mass_b[2] = {0, 0};
    for (std::size_t a = 0; a < na; ++a) mass_a[in_alpha[a]] += s.p_a_given_c[c][a];
    for (std::size_t b = 0; b < nb; ++b) mass_b[in_beta[b]] += s.p_b_given_c[c][b];
    for (int i = 0; i < 2; ++i)
      if (mass_a[i] <= 0 || mass_b[i] <= 0) {
        std::ostringstream os;
        os << (mass_a[i] <= 0 ? "alpha" : "beta") << " block " << (i ? "" : "complement ")
           << "has zero probability in stratum " << c;
        throw DegenerateError(os.str());
      }

    RiskCells mixed{};
    for (std::size_t u = 0; u < nu; ++u) {
      RiskCells r{};
      for (std::size_t a = 0; a < na; ++a) {
        const int i = in_alpha[a];
        double inner[2] = {0, 0};
        for (std::size_t b = 0; b < nb; ++b)
          inner[in_beta[b]] += f(a, b, c, u) * s.p_b_given_c[c][b] / mass_b[in_beta[b]];
        const double wa = s.p_a_given_c[c][a] / mass_a[i];
        r[i][0] += wa * inner[0];
        r[i][1] += wa * inner[1];
      }
      t.by_cu[c][u] = r;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) mixed[i][j] += s.p_u_given_c[c][u] * r[i][j];
    }
    t.by_c[c] = mixed;
  }
  return t;
}

double observational_conditional_risk(const Scenario& s, std::size_t a, std::size_t b,
                                      std::size_t c) {
  const auto& f = s.response;
  if (a >= f.domain_a().size() || b >= f.domain_b().size() || c >= f.domain_c().size())
    throw DomainError("level position outside the domain");
  double joint = 0, events = 0;
  for (std::size_t u = 0; u < f.domain_u().size(); ++u) {
    const double p =
        s.p_c[c] * s.p_u_given_c[c][u] * s.p_a_given_c[c][a] * s.p_b_given_c[c][b];
    joint += p;
    events += p * f(a, b, c, u);
  }
  if (joint <= 0) throw DegenerateError("(A, B, C) configuration has zero probability");
  return events / joint;
}

double interventional_risk(const Scenario& s, std::size_t a, std::size_t b, std::size_t c) {
  const auto& f = s.response;
  if (a >= f.domain_a().size() || b >= f.domain_b().size() || c >= f.domain_c().size())
    throw DomainError("level position outside the domain");
  double r = 0;
  for (std::size_t u = 0; u < f.domain_u().size(); ++u) r += s.p_u_given_c[c][u] * f(a, b, c, u);
  return r;
}

estimation::Dataset sample_dataset(const Scenario& s, std::size_t n, std::uint64_t seed,
                                   bool include_u) {
  using estimation::Column;
  using estimation::ColumnType;
  s.validate();
  if (n == 0) throw UsageError("sample size must be at least 1");
  const auto& f = s.response;
  const bool with_c = f.domain_c().size() > 1;

  Column ca{f.domain_a().name(), ColumnType::ordinal, {}};
  Column cb{f.domain_b().name(), ColumnType::ordinal, {}};
  Column cc{f.domain_c().name(), ColumnType::ordinal, {}};
  Column cu{f.domain_u().name(), ColumnType::ordinal, {}};
  Column cy{"Y", ColumnType::binary, {}};
  for (const auto& name : {ca.name, cb.name, cc.name, cu.name})
    if (name == "Y") throw UsageError("a factor or context variable is named 'Y'");

  rng::Stream st(seed, "sampling");
  for (std::size_t r = 0; r < n; ++r) {
    const auto c = st.categorical(s.p_c);
    const auto u = st.categorical(s.p_u_given_c[c]);
    std::size_t a = s.regime.a, b = s.regime.b;
    if (s.regime.observational) {
      a = st.categorical(s.p_a_given_c[c]);
      b = st.categorical(s.p_b_given_c[c]);
    }
    ca.values.push_back(f.domain_a().value(a));
    cb.values.push_back(f.domain_b().value(b));
    cc.values.push_back(f.domain_c().value(c));
    cu.values.push_back(f.domain_u().value(u));
    cy.values.push_back(f(a, b, c, u));
  }

  std::vector<Column> cols;
  if (with_c) cols.push_back(std::move(cc));
  cols.push_back(std::move(ca));
  cols.push_back(std::move(cb));
  if (include_u) cols.push_back(std::move(cu));
  cols.push_back(std::move(cy));
  return estimation::Dataset(std::move(cols), "Y");
}

// ---------------------------------------------------------------------------
// Random monotone scenarios

namespace {

VariableDomain levels(const char* name, std::size_t k) {
  std::vector<double> v(k);
  std::iota(v.begin(), v.end(), 0.0);
  return VariableDomain(name, std::move(v));
}

std::size_t pick(rng::Stream& st, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(st.below(hi - lo + 1));
}

std::vector<double> simplex(rng::Stream& st, std::size_t k) {
  std::vector<double> p(k);
  st.simplex(p);
  // Renormalize in long double so the table passes the 1e-12 sum check.
  long double total = 0;
  for (double v : p) total += v;
  for (auto& v : p) v = static_cast<double>(v / total);
  return p;
}

}  // namespace

ScenarioGenerator monotone_scenario_generator(GeneratorOptions opt) {
  if (opt.min_levels < 2 || opt.max_levels < opt.min_levels)
    throw UsageError("factor levels must satisfy 2 <= min_levels <= max_levels");
  if (opt.max_c_levels < 1 || opt.max_u_levels < 1)
    throw UsageError("context level bounds must be at least 1");

  return [opt](rng::Stream& st) {
    const auto ka = pick(st, opt.min_levels, opt.max_levels);
    const auto kb = pick(st, opt.min_levels, opt.max_levels);
    const auto kc = pick(st, 1, opt.max_c_levels);
    const auto ku = pick(st, 1, opt.max_u_levels);
    const bool threshold = opt.blocks == GeneratorOptions::Blocks::threshold;
    // First level of each upper block.
    const auto sa = threshold ? pick(st, 1, ka - 1) : ka - 1;
    const auto sb = threshold ? pick(st, 1, kb - 1) : kb - 1;

    // f(a, b) = 1 iff a >= t(b), t non-increasing in b, constant on beta,
    // never strictly inside alpha.
    std::vector<std::size_t> allowed;
    for (std::size_t t = 0; t <= sa; ++t) allowed.push_back(t);
    allowed.push_back(ka);

    std::vector<std::uint8_t> table(ka * kb * kc * ku);
    auto at = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t u) -> std::uint8_t& {
      return table[((a * kb + b) * kc + c) * ku + u];
    };
    for (std::size_t c = 0; c < kc; ++c)
      for (std::size_t u = 0; u < ku; ++u) {
        std::vector<std::size_t> t(kb);
        auto idx = pick(st, 0, allowed.size() - 1);
        for (std::size_t b = kb; b-- > sb;) t[b] = allowed[idx];
        for (std::size_t b = sb; b-- > 0;) {
          idx = pick(st, idx, allowed.size() - 1);
          t[b] = allowed[idx];
        }
        for (std::size_t a = 0; a < ka; ++a)
          for (std::size_t b = 0; b < kb; ++b) at(a, b, c, u) = a >= t[b];
      }

    if (opt.flip_rate > 0 && st.bernoulli(opt.flip_rate)) {
      std::vector<std::uint8_t> flipped(table.size());
      for (std::size_t a = 0; a < ka; ++a)
        for (std::size_t b = 0; b < kb; ++b)
          for (std::size_t c = 0; c < kc; ++c)
            for (std::size_t u = 0; u < ku; ++u)
              flipped[(((ka - 1 - a) * kb + b) * kc + c) * ku + u] = at(a, b, c, u);
      table = std::move(flipped);
    }
    if (opt.non_monotone_rate > 0 && st.bernoulli(opt.non_monotone_rate)) {
      auto& cell = table[st.below(table.size())];
      cell = 1 - cell;
    }

    auto da = levels("A", ka), db = levels("B", kb);
    auto dc = kc == 1 ? VariableDomain::singleton("C") : levels("C", kc);
    auto du = ku == 1 ? VariableDomain::singleton("U") : levels("U", ku);
    GeneratedScenario g{
        Scenario{ResponseFunction(std::move(da), std::move(db), std::move(dc), std::move(du),
                                  std::move(table)),
                 {}, {}, {}, {}, {}},
        Dichotomy{ValueSet::above("A", static_cast<double>(sa - 1)),
                  ValueSet::above("B", static_cast<double>(sb - 1))}};
    auto& s = g.scenario;
    s.p_c = simplex(st, kc);
    for (std::size_t c = 0; c < kc; ++c) {
      s.p_u_given_c.push_back(simplex(st, ku));
      s.p_a_given_c.push_back(simplex(st, ka));
      s.p_b_given_c.push_back(simplex(st, kb));
    }
    return g;
  };
}

// ---------------------------------------------------------------------------
// Soundness experiment

namespace {

struct TrialOutcome {
  std::optional<std::string> skip;
  bool positive = false;
  std::size_t claims = 0, confirmed = 0;
  std::vector<Counterexample> counterexamples;
};

TrialOutcome run_trial(const ScenarioGenerator& generator, std::size_t k, std::uint64_t seed) {
  TrialOutcome out;
  rng::Stream st(seed, "scenario", k);
  std::optional<GeneratedScenario> drawn;
  try {
    drawn = generator(st);
    drawn->scenario.validate();
  } catch (const UsageError&) {
    out.skip = "invalid scenario";
    return out;
  }
  const auto& g = *drawn;
  const auto& f = g.scenario.response;
  if (mechanism::check_monotonicity(f, Factor::A) == mechanism::Monotonicity::none) {
    out.skip = "f is not monotone in A";
    return out;
  }
  if (mechanism::check_monotonicity(f, Factor::B) == mechanism::Monotonicity::none) {
    out.skip = "f is not monotone in B";
    return out;
  }
  const bool alpha_ok = mechanism::check_alpha_insensitivity(f, Factor::A, g.dichotomy.alpha);
  const bool beta_ok = mechanism::check_alpha_insensitivity(f, Factor::B, g.dichotomy.beta);
  if (!alpha_ok && !beta_ok) {
    out.skip = "neither block is insensitive";
    return out;
  }

  ExactRiskTable risk;
  try {
    risk = exact_risk(g.scenario, g.dichotomy);
  } catch (const DegenerateError&) {
    out.skip = "degenerate block";
    return out;
  }

  // Each stratum with S > 0 licenses a claim about the contexts in that stratum.
  for (std::size_t c = 0; c < risk.by_c.size(); ++c) {
    const double excess = risk.excess(c);
    if (excess <= kExcessTolerance) continue;
    out.positive = true;
    auto claim = [&](bool applies, Factor actor, const char* text) {
      if (!applies) return;
      ++out.claims;
      if (mechanism::check_interference(f, actor, c).holds)
        ++out.confirmed;
      else
        out.counterexamples.push_back({k, c, excess, text});
    };
    claim(alpha_ok, Factor::B, "B interferes with A");
    claim(beta_ok, Factor::A, "A interferes with B");
  }
  return out;
}

}  // namespace

SoundnessReport soundness_experiment(const ScenarioGenerator& generator, std::size_t trials,
                                     std::uint64_t seed, unsigned workers) {
  if (trials == 0) throw UsageError("at least one trial is required");
  std::vector<TrialOutcome> outcomes(trials);
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < trials;) {
      try {
        outcomes[k] = run_trial(generator, k, seed);
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        next.store(trials);
      }
    }
  };
  workers = std::max(1u, workers);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  SoundnessReport r;
  r.trials = trials;
  for (auto& o : outcomes) {
    if (o.skip) {
      ++r.skipped;
      ++r.skip_reasons[*o.skip];
      continue;
    }
    ++r.evaluated;
    r.positives += o.positive;
    r.claims += o.claims;
    r.confirmed += o.confirmed;
    for (auto& ce : o.counterexamples) r.counterexamples.push_back(std::move(ce));
  }
  return r;
}

}  // namespace coact::simulator
