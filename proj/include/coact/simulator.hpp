#pragma once

// Populations under deep determinism: scenarios with explicit context and
// factor laws, exact cell risks by enumeration, seeded sampling, and the
// randomized soundness experiment for the excess-risk criterion.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coact/dataset.hpp"
#include "coact/mechanism.hpp"
#include "coact/rng.hpp"

namespace coact::simulator {

using mechanism::ResponseFunction;
using mechanism::ValueSet;

/// sigma = empty (observational) or sigma = (a, b), given as level positions.
struct Regime {
  bool observational = true;
  std::size_t a = 0, b = 0;

  static Regime intervene(std::size_t a, std::size_t b) { return {false, a, b}; }
};

/// Y = f(A, B, C, U) with C ~ p_c, U | C ~ p_u_given_c and, observationally,
/// A | C ~ p_a_given_c and B | C ~ p_b_given_c drawn independently.
struct Scenario {
  ResponseFunction response;
  std::vector<double> p_c;
  std::vector<std::vector<double>> p_u_given_c;  // [c][u]
  std::vector<std::vector<double>> p_a_given_c;  // [c][a]
  std::vector<std::vector<double>> p_b_given_c;  // [c][b]
  Regime regime;

  /// UsageError unless every table matches its domain, is non-negative and
  /// sums to 1 within 1e-12, and the regime levels exist.
  void validate() const;
};

struct Dichotomy {
  ValueSet alpha, beta;
};

using RiskCells = std::array<std::array<double, 2>, 2>;  // [i][j]

struct ExactRiskTable {
  std::vector<RiskCells> by_c;                // R_ijc
  std::vector<std::vector<RiskCells>> by_cu;  // R_ijc(u)

  double excess(std::size_t c) const;
  double excess(std::size_t c, std::size_t u) const;
};

/// Exact R_ijc(u) by summing f over the blocks weighted by P(a | alpha=i, c)
/// and P(b | beta=j, c), then mixing over P(u | c). Observational scenarios
/// only; DegenerateError when a block has zero probability in some stratum.
ExactRiskTable exact_risk(const Scenario& s, const Dichotomy& d);

/// P(Y=1 | A=a, B=b, C=c) in the observational joint law, by enumeration.
/// DegenerateError if (a, b, c) has zero probability.
double observational_conditional_risk(const Scenario& s, std::size_t a, std::size_t b,
                                      std::size_t c);

/// P(Y=1 | C=c) under sigma = (a, b): f mixed over P(u | c).
double interventional_risk(const Scenario& s, std::size_t a, std::size_t b, std::size_t c);

/// n i.i.d. rows with columns C (when |C| > 1), A, B, optionally U, and Y,
/// named after the response domains. Values are domain values.
estimation::Dataset sample_dataset(const Scenario& s, std::size_t n, std::uint64_t seed,
                                   bool include_u = false);

// ---------------------------------------------------------------------------
// Soundness experiment

struct GeneratorOptions {
  enum class Blocks { singleton, threshold };
  Blocks blocks = Blocks::singleton;
  std::size_t min_levels = 2, max_levels = 4;  // |A| and |B|
  std::size_t max_c_levels = 2, max_u_levels = 3;
  /// Chance that one random table cell is flipped after construction, which
  /// usually breaks monotonicity.
  double non_monotone_rate = 0.0;
  /// Chance of reversing the level order of A (f then non-increasing in A).
  double flip_rate = 0.0;
};

struct GeneratedScenario {
  Scenario scenario;
  Dichotomy dichotomy;
};

using ScenarioGenerator = std::function<GeneratedScenario(rng::Stream&)>;

/// Random f that is non-decreasing in A and B in every context, built from
/// per-context staircase threshold surfaces. Thresholds avoid the interior of
/// the alpha and beta blocks, so both blocks are insensitive by construction.
ScenarioGenerator monotone_scenario_generator(GeneratorOptions opt = {});

struct Counterexample {
  std::size_t trial = 0;
  std::size_t stratum = 0;
  double excess = 0;
  std::string claim;  // "B interferes with A" or "A interferes with B"
};

struct SoundnessReport {
  std::size_t trials = 0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
  std::map<std::string, std::size_t> skip_reasons;
  std::size_t positives = 0;  // evaluated trials with exact S > 0 in some stratum
  std::size_t claims = 0;     // interference claims checked, one per block per positive stratum
  std::size_t confirmed = 0;
  std::vector<Counterexample> counterexamples;
};

/// Excess below this is treated as zero (summation round-off).
inline constexpr double kExcessTolerance = 1e-12;

/// Trial k draws its scenario from the stream (seed, "scenario", k). The
/// report does not depend on `workers`.
SoundnessReport soundness_experiment(const ScenarioGenerator& generator, std::size_t trials,
                                     std::uint64_t seed, unsigned workers = 1);

}  // namespace coact::simulator
