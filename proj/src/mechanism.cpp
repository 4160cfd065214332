#include "coact/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "coact/errors.hpp"

namespace coact::mechanism {

const char* to_string(Factor f) { return f == Factor::A ? "A" : "B"; }

const char* to_string(PatternClass c) {
  switch (c) {
    case PatternClass::irrelevance: return "irrelevance";
    case PatternClass::disjunctive: return "disjunctive";
    case PatternClass::interdependent: return "interdependent";
  }
  return "?";
}

const char* to_string(Monotonicity m) {
  switch (m) {
    case Monotonicity::non_decreasing: return "non_decreasing";
    case Monotonicity::non_increasing: return "non_increasing";
    case Monotonicity::constant: return "constant";
    case Monotonicity::none: return "none";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// VariableDomain

VariableDomain::VariableDomain(std::string name, std::vector<double> values,
                               std::vector<std::string> labels, bool ordered)
    : name_(std::move(name)), values_(std::move(values)), labels_(std::move(labels)),
      ordered_(ordered) {
  if (values_.empty()) throw DomainError("domain '" + name_ + "' has no levels");
  if (!labels_.empty() && labels_.size() != values_.size())
    throw DomainError("domain '" + name_ + "': label count does not match level count");
  std::set<double> seen;
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("domain '" + name_ + "': non-finite level");
    if (!seen.insert(v).second) throw DomainError("domain '" + name_ + "': duplicate level");
  }
  if (ordered_ && !std::is_sorted(values_.begin(), values_.end()))
    throw DomainError("domain '" + name_ + "': ordered levels must be listed in increasing order");
}

VariableDomain VariableDomain::singleton(std::string name) {
  return VariableDomain(std::move(name), {0.0});
}

std::string VariableDomain::label(std::size_t i) const {
  if (!labels_.empty()) return labels_.at(i);
  std::ostringstream os;
  os << values_.at(i);
  return os.str();
}

std::optional<std::size_t> VariableDomain::find(double v) const {
  auto it = std::find(values_.begin(), values_.end(), v);
  if (it == values_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - values_.begin());
}

std::size_t VariableDomain::index_of(double v) const {
  if (auto i = find(v)) return *i;
  std::ostringstream os;
  os << "level " << v << " is not in domain '" << name_ << "'";
  throw DomainError(os.str());
}

// ---------------------------------------------------------------------------
// ResponseFunction

ResponseFunction::ResponseFunction(VariableDomain a, VariableDomain b, VariableDomain c,
                                   VariableDomain u, std::vector<std::uint8_t> table)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), u_(std::move(u)),
      table_(std::move(table)) {
  const std::size_t cells = a_.size() * b_.size() * c_.size() * u_.size();
  if (table_.size() != cells) {
    std::ostringstream os;
    os << "response table has " << table_.size() << " entries, grid has " << cells;
    throw DomainError(os.str());
  }
  for (auto v : table_)
    if (v > 1) throw DomainError("response table entries must be 0 or 1");
}

void ResponseFunction::validate(Context ctx) const {
  if (ctx.c >= c_.size())
    throw DomainError("context level c=" + std::to_string(ctx.c) + " is outside domain '" +
                      c_.name() + "'");
  if (ctx.u >= u_.size())
    throw DomainError("context level u=" + std::to_string(ctx.u) + " is outside domain '" +
                      u_.name() + "'");
}

// ---------------------------------------------------------------------------
// ValueSet

ValueSet ValueSet::above(std::string variable, double threshold) {
  ValueSet s;
  s.variable_ = std::move(variable);
  s.threshold_ = threshold;
  return s;
}

ValueSet ValueSet::of(std::string variable, std::vector<double> members) {
  if (members.empty()) throw UsageError("value set for '" + variable + "' has no members");
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  ValueSet s;
  s.variable_ = std::move(variable);
  s.members_ = std::move(members);
  return s;
}

bool ValueSet::contains(double v) const {
  if (threshold_) return v > *threshold_;
  return std::binary_search(members_.begin(), members_.end(), v);
}

std::vector<std::size_t> ValueSet::member_levels(const VariableDomain& domain) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < domain.size(); ++i)
    if (contains(domain.value(i))) out.push_back(i);
  return out;
}

std::vector<std::size_t> ValueSet::block_levels(const VariableDomain& domain) const {
  auto levels = member_levels(domain);
  if (levels.empty())
    throw DegenerateError("block " + describe() + " contains no level of '" + domain.name() + "'");
  if (levels.size() == domain.size())
    throw DegenerateError("block " + describe() + " covers every level of '" + domain.name() +
                          "'; its complement is empty");
  return levels;
}

std::string ValueSet::describe() const {
  std::ostringstream os;
  if (threshold_) {
    os << '>' << *threshold_;
    return os.str();
  }
  os << '{';
  for (std::size_t i = 0; i < members_.size(); ++i) os << (i ? "," : "") << members_[i];
  os << '}';
  return os.str();
}

// ---------------------------------------------------------------------------
// Structural checks

namespace {

// True iff, at ctx, some level of `actor` lets the other factor change f.
bool other_matters(const ResponseFunction& f, Factor actor, Context ctx) {
  return !check_irrelevance(f, other(actor), ctx);
}

}  // namespace

bool check_irrelevance(const ResponseFunction& f, Factor target, Context ctx) {
  f.validate(ctx);
  const std::size_t nt = f.domain(target).size();
  const std::size_t no = f.domain(other(target)).size();
  for (std::size_t o = 0; o < no; ++o) {
    const int first = f.by_role(target, 0, o, ctx);
    for (std::size_t t = 1; t < nt; ++t)
      if (f.by_role(target, t, o, ctx) != first) return false;
  }
  return true;
}

InterferenceResult check_interference(const ResponseFunction& f, Factor actor,
                                      std::optional<std::size_t> stratum) {
  const Factor responder = other(actor);
  const std::size_t na = f.domain(actor).size();
  const std::size_t nr = f.domain(responder).size();
  if (stratum && *stratum >= f.domain_c().size())
    throw DomainError("stratum " + std::to_string(*stratum) + " is not a level of '" +
                      f.domain_c().name() + "'");

  for (std::size_t c = 0; c < f.domain_c().size(); ++c) {
    if (stratum && c != *stratum) continue;
    for (std::size_t u = 0; u < f.domain_u().size(); ++u) {
      const Context ctx{c, u};
      if (!other_matters(f, actor, ctx)) continue;

      std::optional<std::size_t> blocking;
      for (std::size_t a = 0; a < na && !blocking; ++a) {
        bool all_zero = true;
        for (std::size_t r = 0; r < nr && all_zero; ++r)
          all_zero = f.by_role(actor, a, r, ctx) == 0;
        if (all_zero) blocking = a;
      }
      if (!blocking) continue;

      InterferenceWitness w;
      w.actor = actor;
      w.context = ctx;
      w.blocking = *blocking;
      for (std::size_t a = 0; a < na; ++a) {
        std::optional<std::size_t> off, on;
        for (std::size_t r = 0; r < nr; ++r) {
          const int v = f.by_role(actor, a, r, ctx);
          if (v == 0 && !off) off = r;
          if (v == 1 && !on) on = r;
        }
        if (off && on) {
          w.pivot = a;
          w.responder_off = *off;
          w.responder_on = *on;
          break;
        }
      }
      return {true, w};
    }
  }
  return {false, std::nullopt};
}

CoactionVerdict classify_coaction(const ResponseFunction& f) {
  CoactionVerdict v;
  auto ab = check_interference(f, Factor::A);
  auto ba = check_interference(f, Factor::B);
  v.a_interferes_with_b = ab.holds;
  v.b_interferes_with_a = ba.holds;
  v.weak = ab.holds || ba.holds;
  v.strong = ab.holds && ba.holds;
  if (ab.witness) v.witnesses.push_back(*ab.witness);
  if (ba.witness) v.witnesses.push_back(*ba.witness);
  return v;
}

// ---------------------------------------------------------------------------
// Binary patterns

namespace {

constexpr const char* kPatternFormula[16] = {
    "FALSE",  "!A & !B", "!A & B", "!A",     "A & !B", "!B",     "A != B", "!A | !B",
    "A & B",  "A == B",  "B",      "!A | B", "A",      "A | !B", "A | B",  "TRUE",
};

}  // namespace

BooleanPattern boolean_pattern(int id) {
  if (id < 1 || id > 16) throw UsageError("Boolean pattern id must be in 1..16");
  BooleanPattern p;
  p.id = id;
  const int bits = id - 1;
  for (int k = 0; k < 4; ++k) p.truth[k] = static_cast<std::uint8_t>((bits >> k) & 1);
  p.formula = kPatternFormula[bits];

  const auto& t = p.truth;  // t[2a+b]
  const bool a_irrelevant = t[0] == t[2] && t[1] == t[3];
  const bool b_irrelevant = t[0] == t[1] && t[2] == t[3];
  const int ones = t[0] + t[1] + t[2] + t[3];
  if (a_irrelevant || b_irrelevant)
    p.kind = PatternClass::irrelevance;
  else if (ones == 3)
    p.kind = PatternClass::disjunctive;
  else
    p.kind = PatternClass::interdependent;
  return p;
}

BooleanPattern classify_boolean_pattern(const ResponseFunction& f, Context ctx) {
  if (f.domain_a().size() != 2 || f.domain_b().size() != 2)
    throw DomainError("Boolean pattern classification needs binary A and B");
  f.validate(ctx);
  int id = 1;
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b)
      id += f.at(a, b, ctx) << (2 * a + b);
  return boolean_pattern(id);
}

// ---------------------------------------------------------------------------
// Ordering properties

namespace {

void require_ordered(const ResponseFunction& f, Factor target) {
  if (!f.domain(target).ordered())
    throw DomainError("domain '" + f.domain(target).name() + "' is not ordered");
}

// Calls fn(column) for every (other, c, u) configuration, where column[t] is
// f at target level t.
template <class Fn>
void for_each_column(const ResponseFunction& f, Factor target, Fn fn) {
  const std::size_t nt = f.domain(target).size();
  const std::size_t no = f.domain(other(target)).size();
  std::vector<int> column(nt);
  for (std::size_t o = 0; o < no; ++o)
    for (std::size_t c = 0; c < f.domain_c().size(); ++c)
      for (std::size_t u = 0; u < f.domain_u().size(); ++u) {
        for (std::size_t t = 0; t < nt; ++t) column[t] = f.by_role(target, t, o, {c, u});
        fn(std::span<const int>(column));
      }
}

}  // namespace

Monotonicity check_monotonicity(const ResponseFunction& f, Factor target) {
  require_ordered(f, target);
  bool up = true, down = true;
  for_each_column(f, target, [&](std::span<const int> col) {
    for (std::size_t t = 1; t < col.size(); ++t) {
      if (col[t] < col[t - 1]) up = false;
      if (col[t] > col[t - 1]) down = false;
    }
  });
  if (up && down) return Monotonicity::constant;
  if (up) return Monotonicity::non_decreasing;
  if (down) return Monotonicity::non_increasing;
  return Monotonicity::none;
}

bool check_consistency(const ResponseFunction& f, Factor target) {
  const std::size_t nt = f.domain(target).size();
  // greater[i][j]: f(i) > f(j) at some configuration.
  std::vector<std::vector<char>> greater(nt, std::vector<char>(nt, 0));
  for_each_column(f, target, [&](std::span<const int> col) {
    for (std::size_t i = 0; i < nt; ++i)
      for (std::size_t j = 0; j < nt; ++j)
        if (col[i] > col[j]) greater[i][j] = 1;
  });
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = i + 1; j < nt; ++j)
      if (greater[i][j] && greater[j][i]) return false;
  return true;
}

std::optional<std::vector<std::size_t>> find_monotone_recoding(const ResponseFunction& f,
                                                               Factor target) {
  const std::size_t nt = f.domain(target).size();
  std::vector<std::size_t> perm(nt);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  if (f.domain(target).ordered() && check_monotonicity(f, target) != Monotonicity::none)
    return perm;
  if (!check_consistency(f, target)) return std::nullopt;

  // Under consistency the sets {t : f(t, config) = 1} form a chain, so sorting
  // levels by how many configurations they switch on yields a monotone order.
  std::vector<std::size_t> ones(nt, 0);
  for_each_column(f, target, [&](std::span<const int> col) {
    for (std::size_t t = 0; t < nt; ++t) ones[t] += static_cast<std::size_t>(col[t]);
  });
  std::stable_sort(perm.begin(), perm.end(),
                   [&](std::size_t x, std::size_t y) { return ones[x] < ones[y]; });
  return perm;
}

ResponseFunction apply_recoding(const ResponseFunction& f, Factor target,
                                std::span<const std::size_t> perm) {
  const VariableDomain& old = f.domain(target);
  if (perm.size() != old.size()) throw UsageError("recoding must list every level once");
  std::vector<char> seen(old.size(), 0);
  for (auto p : perm) {
    if (p >= old.size() || seen[p]) throw UsageError("recoding is not a permutation of levels");
    seen[p] = 1;
  }
  std::vector<double> values(old.size());
  std::vector<std::string> labels(old.size());
  for (std::size_t k = 0; k < perm.size(); ++k) {
    values[k] = static_cast<double>(k);
    labels[k] = old.label(perm[k]);
  }
  VariableDomain recoded(old.name(), std::move(values), std::move(labels), true);
  std::vector<std::size_t> p(perm.begin(), perm.end());

  if (target == Factor::A)
    return ResponseFunction::tabulate(recoded, f.domain_b(), f.domain_c(), f.domain_u(),
                                      [&](auto a, auto b, auto c, auto u) {
                                        return f(p[a], b, c, u) == 1;
                                      });
  return ResponseFunction::tabulate(f.domain_a(), recoded, f.domain_c(), f.domain_u(),
                                    [&](auto a, auto b, auto c, auto u) {
                                      return f(a, p[b], c, u) == 1;
                                    });
}

bool check_alpha_insensitivity(const ResponseFunction& f, Factor target,
                               const ValueSet& block) {
  require_ordered(f, target);
  if (block.variable() != f.domain(target).name())
    throw UsageError("block is defined on '" + block.variable() + "', target is '" +
                     f.domain(target).name() + "'");
  const auto members = block.member_levels(f.domain(target));
  bool ok = true;
  for_each_column(f, target, [&](std::span<const int> col) {
    bool hit_zero = false;
    for (auto t : members) {
      if (col[t] == 0) hit_zero = true;
      else if (hit_zero) ok = false;
    }
  });
  return ok;
}

ResponseFunction negate_outcome(const ResponseFunction& f) {
  std::vector<std::uint8_t> flipped(f.table().begin(), f.table().end());
  for (auto& v : flipped) v = static_cast<std::uint8_t>(1 - v);
  return ResponseFunction(f.domain_a(), f.domain_b(), f.domain_c(), f.domain_u(),
                          std::move(flipped));
}

// ---------------------------------------------------------------------------
// Witness from the excess-risk argument

namespace {

struct Block {
  std::vector<std::size_t> in, out;
  double mass_in = 0, mass_out = 0;
};

Block split(const VariableDomain& domain, const ValueSet& set, std::span<const double> p) {
  if (p.size() != domain.size())
    throw UsageError("weight vector for '" + domain.name() + "' has wrong length");
  Block b;
  for (std::size_t i = 0; i < domain.size(); ++i) {
    if (set.contains(domain.value(i))) {
      b.in.push_back(i);
      b.mass_in += p[i];
    } else {
      b.out.push_back(i);
      b.mass_out += p[i];
    }
  }
  if (b.mass_in <= 0 || b.mass_out <= 0)
    throw DegenerateError("block " + set.describe() + " on '" + domain.name() +
                          "' has zero probability on one side");
  return b;
}

}  // namespace

std::optional<ProofWitness> find_proof_witness(const ResponseFunction& f, std::size_t c,
                                               const ValueSet& alpha, const ValueSet& beta,
                                               std::span<const double> p_a,
                                               std::span<const double> p_b,
                                               std::span<const double> p_u) {
  f.validate({c, 0});
  if (p_u.size() != f.domain_u().size()) throw UsageError("P(u|c) has wrong length");
  const Block A = split(f.domain_a(), alpha, p_a);
  const Block B = split(f.domain_b(), beta, p_b);

  for (std::size_t u = 0; u < f.domain_u().size(); ++u) {
    if (p_u[u] <= 0) continue;
    const Context ctx{c, u};
    // Inner averages of f over a B block at fixed a, and over an A block at fixed b.
    auto over_b = [&](std::size_t a, const std::vector<std::size_t>& lv, double mass) {
      double s = 0;
      for (auto b : lv) s += f.at(a, b, ctx) * p_b[b];
      return s / mass;
    };
    auto over_a = [&](std::size_t b, const std::vector<std::size_t>& lv, double mass) {
      double s = 0;
      for (auto a : lv) s += f.at(a, b, ctx) * p_a[a];
      return s / mass;
    };
    auto cell = [&](bool ai, bool bj) {
      const auto& al = ai ? A.in : A.out;
      const double am = ai ? A.mass_in : A.mass_out;
      double s = 0;
      for (auto a : al) s += p_a[a] / am * over_b(a, bj ? B.in : B.out, bj ? B.mass_in : B.mass_out);
      return s;
    };
    const double excess = cell(true, true) - cell(true, false) - cell(false, true);
    if (!(excess > 1e-12)) continue;

    ProofWitness w;
    w.context = ctx;
    w.excess = excess;
    bool found_a1 = false, found_b3 = false;
    for (auto a : A.in) {
      if (p_a[a] > 0 && over_b(a, B.in, B.mass_in) > over_b(a, B.out, B.mass_out)) {
        w.a1 = a;
        found_a1 = true;
        break;
      }
    }
    for (auto b : B.in) {
      if (p_b[b] > 0 && over_a(b, A.in, A.mass_in) > over_a(b, A.out, A.mass_out)) {
        w.b3 = b;
        found_b3 = true;
        break;
      }
    }
    if (!found_a1 || !found_b3) continue;

    auto first_level = [&](const std::vector<std::size_t>& lv, auto pred) -> std::optional<std::size_t> {
      for (auto x : lv)
        if (pred(x)) return x;
      return std::nullopt;
    };
    auto b1 = first_level(B.in, [&](auto b) { return p_b[b] > 0 && f.at(w.a1, b, ctx) == 1; });
    auto b2 = first_level(B.out, [&](auto b) { return p_b[b] > 0 && f.at(w.a1, b, ctx) == 0; });
    auto a2 = first_level(A.in, [&](auto a) { return p_a[a] > 0 && f.at(a, w.b3, ctx) == 1; });
    auto a3 = first_level(A.out, [&](auto a) { return p_a[a] > 0 && f.at(a, w.b3, ctx) == 0; });
    if (!b1 || !b2 || !a2 || !a3) continue;
    w.b1 = *b1;
    w.b2 = *b2;
    w.a2 = *a2;
    w.a3 = *a3;
    return w;
  }
  return std::nullopt;
}

}  // namespace coact::mechanism
