#pragma once

// The excess-risk statistic S = R11 - R10 - R01 from data: dichotomization,
// nonparametric cell risks, linear-risk and linear-odds Bernoulli models, and
// a row-resampling bootstrap.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "coact/dataset.hpp"
#include "coact/mechanism.hpp"

namespace coact::estimation {

using mechanism::ValueSet;

inline constexpr const char* kAlphaColumn = "alpha_ind";
inline constexpr const char* kBetaColumn = "beta_ind";

// ---------------------------------------------------------------------------
// Assumption checklist echoed in every test result

enum class AssumptionStatus { holds, asserted, failed, unverified };
const char* to_string(AssumptionStatus s);

struct AssumptionItem {
  std::string name;
  AssumptionStatus status = AssumptionStatus::unverified;
  std::string note;
};
using AssumptionChecklist = std::vector<AssumptionItem>;

/// Core conditions 1-4, monotonicity of A and B, alpha/beta insensitivity;
/// all unverified.
AssumptionChecklist default_checklist();
void set_status(AssumptionChecklist& list, std::string_view name, AssumptionStatus s,
                std::string note = {});

// ---------------------------------------------------------------------------
// Dichotomization

/// Conjunction of `column op value` clauses, e.g. "A > 1 && I == 1".
class StratumFilter {
public:
  enum class Op { eq, ne, lt, le, gt, ge };
  struct Clause {
    std::string column;
    Op op = Op::eq;
    double value = 0;
  };

  static StratumFilter parse(std::string_view expr);

  bool accepts(const Dataset& d, std::size_t row) const;
  const std::vector<Clause>& clauses() const { return clauses_; }
  std::vector<std::string> columns() const;
  const std::string& text() const { return text_; }

private:
  std::vector<Clause> clauses_;
  std::string text_;
};

struct DichotomizationSpec {
  std::string a_var, b_var;
  ValueSet alpha, beta;
  /// Level maps applied before block membership; must be bijective on the
  /// levels that survive filtering.
  std::optional<std::map<double, double>> recode_a, recode_b;
  std::optional<StratumFilter> stratum;
  /// Further analysis columns subject to listwise deletion (e.g. a trend).
  std::vector<std::string> keep;
};

struct Dichotomized {
  Dataset data;  // surviving rows, original columns plus alpha_ind / beta_ind
  std::size_t input_rows = 0;
  std::size_t dropped_missing = 0;
  std::size_t dropped_stratum = 0;
  std::string description;
};

/// DegenerateError when alpha or its complement (likewise beta) is empty
/// after filtering.
Dichotomized dichotomize(const Dataset& data, const DichotomizationSpec& spec);

/// Median of the observed values of `column`; a threshold for a balanced split.
double median_threshold(const Dataset& data, const std::string& column);

// ---------------------------------------------------------------------------
// Risk tables and the excess-risk test

inline constexpr std::size_t kLowCount = 5;

struct RiskCell {
  double estimate = 0;
  double se = 0;
  std::size_t count = 0;
  bool low_count = false;
};

struct RiskTable {
  std::string stratum;
  std::array<std::array<std::optional<RiskCell>, 2>, 2> cells;  // [i][j]

  const RiskCell& cell(int i, int j) const;  // UsageError if absent
};

/// Cell proportions of Y=1 with binomial standard errors sqrt(R(1-R)/n).
/// EstimationError naming the cell when a cell is empty.
RiskTable estimate_risk_table(const Dataset& dichotomized, std::string stratum = {});

struct TestResult {
  std::string method;
  double statistic = 0;
  double se = 0;
  double z = 0;
  double p_value = 0.5;  // one-sided, alternative S > 0
  std::array<double, 3> cells{};  // R11, R10, R01 behind the statistic
  std::string dichotomization;
  AssumptionChecklist assumptions = default_checklist();
  std::optional<std::pair<double, double>> interval;
  double interval_level = 0;
  std::vector<std::string> notes;
};

/// Upper-tail normal probability P(Z > z).
double upper_tail(double z);

/// z = S / se and its one-sided p-value; a zero SE collapses to the sign of S.
void fill_normal_test(TestResult& r);

/// S with SE = sqrt(se11^2 + se10^2 + se01^2).
TestResult excess_risk_test(const RiskTable& table);

// ---------------------------------------------------------------------------
// Bernoulli models with a linear mean on the risk or odds scale

enum class Link { linear_risk, linear_odds };
const char* to_string(Link l);

struct Formula {
  bool intercept = true;
  std::vector<std::string> main_effects;
  std::vector<std::pair<std::string, std::string>> interactions;
  std::optional<std::string> trend;
};

/// intercept + alpha_ind + beta_ind + alpha_ind:beta_ind [+ trend]
Formula excess_risk_formula(std::optional<std::string> trend = {});

struct Design {
  std::vector<std::string> names;
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

/// Intercept is named "(Intercept)", interactions "a:b".
Design build_design(const Dataset& data, const Formula& f);

struct FitOptions {
  double epsilon = 1e-6;  // fitted risks kept in [eps, 1-eps]; odds >= eps
  int max_iterations = 400;
  double tolerance = 1e-16;  // stop when half the Newton decrement falls below this
};

struct FitDiagnostics {
  bool converged = false;
  int iterations = 0;
  std::vector<double> trace;  // log-likelihood after each Newton step
  std::size_t active_constraints = 0;
  double min_fitted = 0, max_fitted = 0;
  double log_likelihood = 0;
  bool observed_information = true;  // false: expected information used for cov
};

struct ModelFit {
  Link link = Link::linear_risk;
  std::vector<std::string> names;
  Eigen::VectorXd coef;
  Eigen::MatrixXd cov;
  std::size_t n = 0;
  FitDiagnostics diagnostics;

  /// A fit assembled from published point estimates and standard errors
  /// (diagonal covariance).
  static ModelFit from_estimates(Link link, std::vector<std::string> names,
                                 std::vector<double> estimates, std::vector<double> se);

  std::optional<std::size_t> index(const std::string& name) const;
  std::size_t require(const std::string& name) const;  // UsageError if absent
  double coefficient(const std::string& name) const { return coef(require(name)); }
  double se(const std::string& name) const;
};

/// Bernoulli maximum likelihood on a prepared design. UsageError on a rank
/// deficient design; FitError (with trace) when iterations run out.
ModelFit fit_bernoulli(const Design& design, Link link, const FitOptions& opt = {});

ModelFit fit_linear_risk(const Dataset& data, const Formula& f, const FitOptions& opt = {});

/// FitError when the optimum needs non-positive odds at observed covariates.
ModelFit fit_linear_odds(const Dataset& data, const Formula& f, const FitOptions& opt = {});

/// Covariate patterns of the three cells entering S, by coefficient name.
/// Names not listed count as 0. `trend`, when set, is evaluated at t.
struct CellCoding {
  std::map<std::string, double> cell11, cell10, cell01;
  std::optional<std::string> trend;
};

CellCoding standard_cell_coding(const std::string& intercept, const std::string& a,
                                const std::string& b, const std::string& interaction,
                                std::optional<std::string> trend = {});

/// Coefficient weights w with S = w' coef.
Eigen::VectorXd excess_contrast(const ModelFit& fit, const CellCoding& coding, double t = 0);

/// S = pi(1,1) - pi(1,0) - pi(0,1); SE = sqrt(w' cov w), exact since S is linear.
TestResult model_excess_risk(const ModelFit& fit, const CellCoding& coding, double t = 0);

/// The same contrast on the odds scale of a linear-odds fit, gamma - alpha
/// (- delta t). Its sign carries over to the prospective excess risk when the
/// outcome is rare; the magnitude does not.
TestResult rare_disease_excess(const ModelFit& fit, const CellCoding& coding, double t = 0);

/// Coding by the names excess_risk_formula() produces.
TestResult rare_disease_excess(const ModelFit& fit);

// ---------------------------------------------------------------------------
// Bootstrap

/// Maps a (dichotomized) dataset to S. AnalysisError counts as a failed resample.
using Estimator = std::function<double(const Dataset&)>;

Estimator nonparametric_estimator();
Estimator linear_risk_estimator(Formula f, CellCoding coding, double t = 0);
Estimator linear_odds_estimator(Formula f);

struct BootstrapOptions {
  int resamples = 1000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  double level = 0.95;
};

struct BootstrapResult {
  double estimate = 0;
  double se = 0;
  double lower = 0, upper = 0;
  double p_value = 0;  // share of resampled S <= 0
  int failures = 0;
  std::vector<double> draws;  // successful draws, in resample order
};

BootstrapResult bootstrap(const Dataset& data, const Estimator& estimator,
                          const BootstrapOptions& opt);

/// Wraps bootstrap() as a TestResult with a percentile interval.
TestResult bootstrap_test(const Dataset& data, const Estimator& estimator,
                          const BootstrapOptions& opt);
TestResult bootstrap_test(const BootstrapResult& b, const BootstrapOptions& opt);

}  // namespace coact::estimation
