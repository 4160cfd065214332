#pragma once

// Deterministic response functions Y = f(A, B, C, U) over finite grids, and
// exact decision procedures for the structural properties defined on them:
// irrelevance, interference, weak/strong coaction, monotonicity, consistency
// and block insensitivity. Every check is a full enumeration of the table.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace coact::mechanism {

enum class Factor { A, B };

inline Factor other(Factor f) { return f == Factor::A ? Factor::B : Factor::A; }
const char* to_string(Factor f);

/// Finite, ordered list of levels for one variable. Continuous variables are
/// represented by a caller-chosen grid; the grid is never refined here.
class VariableDomain {
public:
  VariableDomain(std::string name, std::vector<double> values,
                 std::vector<std::string> labels = {}, bool ordered = true);

  /// One-level placeholder used when C or U is absent.
  static VariableDomain singleton(std::string name);

  const std::string& name() const { return name_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<std::string>& labels() const { return labels_; }
  bool ordered() const { return ordered_; }
  std::size_t size() const { return values_.size(); }

  double value(std::size_t i) const { return values_.at(i); }
  std::string label(std::size_t i) const;

  /// Position of `v` in the level list; DomainError if absent.
  std::size_t index_of(double v) const;
  std::optional<std::size_t> find(double v) const;

  bool operator==(const VariableDomain&) const = default;

private:
  std::string name_;
  std::vector<double> values_;
  std::vector<std::string> labels_;
  bool ordered_ = true;
};

/// A (c, u) grid point, as level positions.
struct Context {
  std::size_t c = 0;
  std::size_t u = 0;
  bool operator==(const Context&) const = default;
};

/// Tabulated f(a, b, c, u) in {0, 1}. Storage is row-major in (a, b, c, u)
/// order, u varying fastest:
///   index = ((a * |B| + b) * |C| + c) * |U| + u
class ResponseFunction {
public:
  ResponseFunction(VariableDomain a, VariableDomain b, VariableDomain c,
                   VariableDomain u, std::vector<std::uint8_t> table);

  /// Tabulate `fn(a, b, c, u) -> bool` over level positions.
  template <class Fn>
  static ResponseFunction tabulate(VariableDomain a, VariableDomain b,
                                   VariableDomain c, VariableDomain u, Fn fn) {
    std::vector<std::uint8_t> table;
    table.reserve(a.size() * b.size() * c.size() * u.size());
    for (std::size_t ia = 0; ia < a.size(); ++ia)
      for (std::size_t ib = 0; ib < b.size(); ++ib)
        for (std::size_t ic = 0; ic < c.size(); ++ic)
          for (std::size_t iu = 0; iu < u.size(); ++iu)
            table.push_back(fn(ia, ib, ic, iu) ? 1 : 0);
    return ResponseFunction(std::move(a), std::move(b), std::move(c),
                            std::move(u), std::move(table));
  }

  const VariableDomain& domain_a() const { return a_; }
  const VariableDomain& domain_b() const { return b_; }
  const VariableDomain& domain_c() const { return c_; }
  const VariableDomain& domain_u() const { return u_; }
  const VariableDomain& domain(Factor f) const { return f == Factor::A ? a_ : b_; }

  std::size_t index(std::size_t a, std::size_t b, std::size_t c, std::size_t u) const {
    return ((a * b_.size() + b) * c_.size() + c) * u_.size() + u;
  }

  int operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t u) const {
    return table_[index(a, b, c, u)];
  }
  int at(std::size_t a, std::size_t b, Context ctx) const { return (*this)(a, b, ctx.c, ctx.u); }

  /// f with the levels of `target` and of the other factor given by role.
  int by_role(Factor target, std::size_t target_level, std::size_t other_level,
              Context ctx) const {
    return target == Factor::A ? at(target_level, other_level, ctx)
                               : at(other_level, target_level, ctx);
  }

  std::span<const std::uint8_t> table() const { return table_; }
  std::size_t context_count() const { return c_.size() * u_.size(); }

  /// DomainError unless ctx lies on the (C, U) grid.
  void validate(Context ctx) const;

  bool operator==(const ResponseFunction&) const = default;

private:
  VariableDomain a_, b_, c_, u_;
  std::vector<std::uint8_t> table_;
};

/// A set of levels of one variable: either explicit members or the upper set
/// {v : v > threshold}. Ties at the threshold fall in the complement.
class ValueSet {
public:
  static ValueSet above(std::string variable, double threshold);
  static ValueSet of(std::string variable, std::vector<double> members);

  const std::string& variable() const { return variable_; }
  const std::optional<double>& threshold() const { return threshold_; }
  const std::vector<double>& members() const { return members_; }

  bool contains(double v) const;

  /// Level positions of `domain` inside the set, ascending.
  std::vector<std::size_t> member_levels(const VariableDomain& domain) const;

  /// member_levels, additionally requiring a non-empty strict subset.
  std::vector<std::size_t> block_levels(const VariableDomain& domain) const;

  /// ">2.5" or "{1,3}".
  std::string describe() const;

private:
  std::string variable_;
  std::vector<double> members_;
  std::optional<double> threshold_;
};

/// Evidence that `actor` interferes with the other factor, as level positions:
/// f(blocking, *, ctx) == 0, while at actor level `pivot` the other factor
/// moves f from 0 (at `responder_off`) to 1 (at `responder_on`).
struct InterferenceWitness {
  Factor actor = Factor::A;
  Context context;
  std::size_t blocking = 0;
  std::size_t pivot = 0;
  std::size_t responder_off = 0;
  std::size_t responder_on = 0;
};

struct InterferenceResult {
  bool holds = false;
  std::optional<InterferenceWitness> witness;
};

struct CoactionVerdict {
  bool a_interferes_with_b = false;
  bool b_interferes_with_a = false;
  bool weak = false;
  bool strong = false;
  std::vector<InterferenceWitness> witnesses;
};

enum class PatternClass { irrelevance, disjunctive, interdependent };
const char* to_string(PatternClass c);

/// One of the sixteen Boolean patterns of a binary-by-binary table.
/// id = 1 + sum f(a,b) * 2^(2a+b), so id 1 is FALSE and id 16 is TRUE.
struct BooleanPattern {
  int id = 1;
  PatternClass kind = PatternClass::irrelevance;
  std::array<std::uint8_t, 4> truth{};  // f(0,0), f(0,1), f(1,0), f(1,1)
  const char* formula = "";
};

enum class Monotonicity { non_decreasing, non_increasing, constant, none };
const char* to_string(Monotonicity m);

/// Level positions drawn from the constructive argument behind the
/// excess-risk theorem: in context (c, u), with a1, a2 in alpha, a3 outside,
/// b1, b3 in beta and b2 outside,
///   f(a1,b1)=1, f(a1,b2)=0, f(a2,b3)=1, f(a3,b3)=0.
struct ProofWitness {
  Context context;
  std::size_t a1 = 0, b1 = 0, b2 = 0, a2 = 0, a3 = 0, b3 = 0;
  double excess = 0.0;  // R11(u) - R10(u) - R01(u) at the witness context
};

/// True iff f does not depend on `target` at ctx for any level of the other factor.
bool check_irrelevance(const ResponseFunction& f, Factor target, Context ctx);

/// Contexts are scanned in (c, u) lexicographic order and the first witness
/// is returned, so the result is deterministic. `stratum` limits the scan to
/// contexts with that level of C.
InterferenceResult check_interference(const ResponseFunction& f, Factor actor,
                                      std::optional<std::size_t> stratum = std::nullopt);

CoactionVerdict classify_coaction(const ResponseFunction& f);

/// Requires |A| = |B| = 2; DomainError otherwise.
BooleanPattern classify_boolean_pattern(const ResponseFunction& f, Context ctx);
BooleanPattern boolean_pattern(int id);

/// Ordering is list position. DomainError for an unordered target.
Monotonicity check_monotonicity(const ResponseFunction& f, Factor target);

bool check_consistency(const ResponseFunction& f, Factor target);

/// perm[k] = original level placed at position k. Identity when f is already
/// monotone in `target`; empty when f is not consistent in `target`.
std::optional<std::vector<std::size_t>> find_monotone_recoding(const ResponseFunction& f,
                                                               Factor target);

/// Reorders the levels of `target`. Recoded levels take values 0..k-1 and keep
/// the original values as labels.
ResponseFunction apply_recoding(const ResponseFunction& f, Factor target,
                                std::span<const std::size_t> perm);

/// For every (b, c, u): once f hits 0 at some level in `block`, it stays 0 at
/// every larger level of the block. Always true for a singleton block; for an
/// upper-set block this is the same as quantifying over all larger levels.
bool check_alpha_insensitivity(const ResponseFunction& f, Factor target,
                               const ValueSet& block);

ResponseFunction negate_outcome(const ResponseFunction& f);

/// Searches the u-contexts of stratum `c` (ascending) for the first one with
/// positive excess risk and extracts the witness levels. `p_a`, `p_b`, `p_u`
/// are P(a|c), P(b|c), P(u|c). Empty when no u has positive excess.
std::optional<ProofWitness> find_proof_witness(const ResponseFunction& f, std::size_t c,
                                               const ValueSet& alpha, const ValueSet& beta,
                                               std::span<const double> p_a,
                                               std::span<const double> p_b,
                                               std::span<const double> p_u);

}  // namespace coact::mechanism
