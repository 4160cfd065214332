#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "coact/errors.hpp"
#include "coact/estimation.hpp"

namespace coact::estimation {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* to_string(Link l) {
  return l == Link::linear_risk ? "linear-risk" : "linear-odds";
}

Formula excess_risk_formula(std::optional<std::string> trend) {
  Formula f;
  f.main_effects = {kAlphaColumn, kBetaColumn};
  f.interactions = {{kAlphaColumn, kBetaColumn}};
  f.trend = std::move(trend);
  return f;
}

Design build_design(const Dataset& data, const Formula& f) {
  const std::size_t n = data.rows();
  std::vector<std::string> names;
  std::vector<VectorXd> cols;

  auto column = [&](const std::string& name) {
    const auto& v = data.values(name);
    VectorXd c(n);
    for (std::size_t r = 0; r < n; ++r) {
      if (std::isnan(v[r]))
        throw UsageError("column '" + name + "' has a missing value at row " + std::to_string(r + 1));
      c(r) = v[r];
    }
    return c;
  };

  if (f.intercept) {
    names.push_back("(Intercept)");
    cols.push_back(VectorXd::Ones(n));
  }
  for (const auto& m : f.main_effects) {
    names.push_back(m);
    cols.push_back(column(m));
  }
  for (const auto& [a, b] : f.interactions) {
    names.push_back(a + ":" + b);
    cols.push_back(column(a).cwiseProduct(column(b)));
  }
  if (f.trend) {
    names.push_back(*f.trend);
    cols.push_back(column(*f.trend));
  }
  if (cols.empty()) throw UsageError("formula has no terms");
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (names[i] == names[j]) throw UsageError("formula repeats the term '" + names[i] + "'");

  Design d;
  d.names = std::move(names);
  d.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) d.x.col(static_cast<Eigen::Index>(k)) = cols[k];
  d.y = column(data.outcome());
  return d;
}

// ---------------------------------------------------------------------------
// Maximum likelihood under a log barrier

namespace {

constexpr double kActiveSlack = 1e-7;

struct Problem {
  const MatrixXd& x;
  const VectorXd& y;
  Link link;
  double eps;

  bool feasible(const VectorXd& eta) const {
    if (link == Link::linear_risk)
      return (eta.array() > eps).all() && (eta.array() < 1.0 - eps).all();
    return (eta.array() > eps).all();
  }

  double loglik(const VectorXd& eta) const {
    const auto e = eta.array();
    const auto yy = y.array();
    if (link == Link::linear_risk)
      return (yy * e.log() + (1.0 - yy) * (1.0 - e).log()).sum();
    return (yy * e.log() - (1.0 + e).log()).sum();
  }

  double barrier(const VectorXd& eta) const {
    const auto e = eta.array();
    if (link == Link::linear_risk) return ((e - eps).log() + (1.0 - eps - e).log()).sum();
    return (e - eps).log().sum();
  }

  // d loglik / d eta
  VectorXd score(const VectorXd& eta) const {
    const auto e = eta.array();
    const auto yy = y.array();
    if (link == Link::linear_risk) return yy / e - (1.0 - yy) / (1.0 - e);
    return yy / e - 1.0 / (1.0 + e);
  }

  // Curvature weights used for the Newton step: observed information for the
  // (concave) risk likelihood, expected information for the odds likelihood.
  VectorXd step_weights(const VectorXd& eta) const {
    const auto e = eta.array();
    const auto yy = y.array();
    if (link == Link::linear_risk) return yy / e.square() + (1.0 - yy) / (1.0 - e).square();
    return 1.0 / (e * (1.0 + e).square());
  }

  VectorXd observed_weights(const VectorXd& eta) const {
    const auto e = eta.array();
    const auto yy = y.array();
    if (link == Link::linear_risk) return step_weights(eta);
    return yy / e.square() - 1.0 / (1.0 + e).square();
  }

  VectorXd barrier_score(const VectorXd& eta) const {
    const auto e = eta.array();
    if (link == Link::linear_risk) return 1.0 / (e - eps) - 1.0 / (1.0 - eps - e);
    return 1.0 / (e - eps);
  }

  VectorXd barrier_weights(const VectorXd& eta) const {
    const auto e = eta.array();
    if (link == Link::linear_risk) return 1.0 / (e - eps).square() + 1.0 / (1.0 - eps - e).square();
    return 1.0 / (e - eps).square();
  }

  VectorXd slack(const VectorXd& eta) const {
    if (link == Link::linear_risk)
      return (eta.array() - eps).min(1.0 - eps - eta.array()).matrix();
    return (eta.array() - eps).matrix();
  }
};

VectorXd starting_point(const Problem& p) {
  const double ybar = p.y.mean();
  const double risk = std::clamp(ybar, 0.05, 0.95);
  const double target = p.link == Link::linear_risk ? risk : risk / (1.0 - risk);
  const VectorXd want = VectorXd::Constant(p.x.rows(), target);
  VectorXd beta = p.x.colPivHouseholderQr().solve(want);
  const VectorXd eta = p.x * beta;
  if ((eta - want).cwiseAbs().maxCoeff() > 1e-8 || !p.feasible(eta))
    throw FitError("no feasible starting point: the design cannot represent a constant " +
                   std::string(p.link == Link::linear_risk ? "risk" : "odds"));
  return beta;
}

struct NewtonState {
  VectorXd beta;
  int iterations = 0;
  std::vector<double> trace;
};

// Maximizes loglik + mu * barrier (mu = 0: plain likelihood) from a strictly
// feasible point. Returns false if the iteration budget runs out.
bool newton(const Problem& p, double mu, NewtonState& s, const FitOptions& opt) {
  auto objective = [&](const VectorXd& eta) {
    return p.loglik(eta) + (mu > 0 ? mu * p.barrier(eta) : 0.0);
  };
  VectorXd eta = p.x * s.beta;
  double value = objective(eta);
  for (;;) {
    VectorXd g = p.score(eta);
    VectorXd w = p.step_weights(eta);
    if (mu > 0) {
      g += mu * p.barrier_score(eta);
      w += mu * p.barrier_weights(eta);
    }
    const VectorXd grad = p.x.transpose() * g;
    const MatrixXd h = p.x.transpose() * w.asDiagonal() * p.x;
    const VectorXd dir = h.ldlt().solve(grad);
    const double decrement = grad.dot(dir);
    if (!std::isfinite(decrement)) throw FitError("non-finite Newton step", s.trace);
    if (decrement / 2 < opt.tolerance) return true;
    if (s.iterations >= opt.max_iterations) return false;

    double step = 1.0;
    VectorXd next_beta, next_eta;
    double next_value = -std::numeric_limits<double>::infinity();
    for (int halving = 0; halving < 80; ++halving, step *= 0.5) {
      next_beta = s.beta + step * dir;
      next_eta = p.x * next_beta;
      if (!p.feasible(next_eta)) continue;
      next_value = objective(next_eta);
      if (next_value >= value + 1e-4 * step * decrement) break;
    }
    ++s.iterations;
    if (!(next_value > value)) {
      // No ascent left at machine precision.
      s.trace.push_back(p.loglik(eta));
      return true;
    }
    s.beta = next_beta;
    eta = next_eta;
    value = next_value;
    s.trace.push_back(p.loglik(eta));
  }
}

}  // namespace

ModelFit fit_bernoulli(const Design& design, Link link, const FitOptions& opt) {
  const auto n = design.x.rows();
  const auto k = design.x.cols();
  if (design.y.size() != n) throw UsageError("design and outcome lengths differ");
  if (static_cast<std::size_t>(k) != design.names.size())
    throw UsageError("design has " + std::to_string(k) + " columns but " +
                     std::to_string(design.names.size()) + " names");
  if (n < k) throw UsageError("fewer observations than coefficients");
  Eigen::ColPivHouseholderQR<MatrixXd> qr(design.x);
  if (qr.rank() < k) {
    std::ostringstream os;
    os << "design matrix is rank deficient (rank " << qr.rank() << " < " << k << " columns)";
    throw UsageError(os.str());
  }
  if (!(opt.epsilon > 0 && opt.epsilon < 0.5)) throw UsageError("epsilon must lie in (0, 0.5)");

  const Problem p{design.x, design.y, link, opt.epsilon};
  NewtonState s;
  s.beta = starting_point(p);

  auto out_of_iterations = [&] {
    return FitError("no convergence after " + std::to_string(opt.max_iterations) + " iterations",
                    s.trace);
  };
  double mu = 1e-2;
  for (int stage = 0; stage < 11; ++stage, mu /= 10)
    if (!newton(p, mu, s, opt)) throw out_of_iterations();

  VectorXd eta = design.x * s.beta;
  if (p.slack(eta).minCoeff() > kActiveSlack) {
    NewtonState polished = s;
    if (!newton(p, 0.0, polished, opt)) throw out_of_iterations();
    s = std::move(polished);
    eta = design.x * s.beta;
  }

  ModelFit fit;
  fit.link = link;
  fit.names = design.names;
  fit.coef = s.beta;
  fit.n = static_cast<std::size_t>(n);
  auto& d = fit.diagnostics;
  d.converged = true;
  d.iterations = s.iterations;
  d.trace = s.trace;
  const VectorXd slack = p.slack(eta);
  d.active_constraints = static_cast<std::size_t>((slack.array() <= kActiveSlack).count());
  d.min_fitted = eta.minCoeff();
  d.max_fitted = eta.maxCoeff();
  d.log_likelihood = p.loglik(eta);

  if (link == Link::linear_odds && d.active_constraints > 0)
    throw FitError("the likelihood optimum needs non-positive odds at " +
                       std::to_string(d.active_constraints) + " observed covariate rows",
                   s.trace);

  MatrixXd info = design.x.transpose() * p.observed_weights(eta).asDiagonal() * design.x;
  Eigen::LLT<MatrixXd> llt(info);
  if (llt.info() != Eigen::Success) {
    info = design.x.transpose() * p.step_weights(eta).asDiagonal() * design.x;
    llt.compute(info);
    d.observed_information = false;
    if (llt.info() != Eigen::Success) throw FitError("information matrix is singular", s.trace);
  }
  fit.cov = llt.solve(MatrixXd::Identity(k, k));
  fit.cov = 0.5 * (fit.cov + fit.cov.transpose()).eval();
  return fit;
}

ModelFit fit_linear_risk(const Dataset& data, const Formula& f, const FitOptions& opt) {
  return fit_bernoulli(build_design(data, f), Link::linear_risk, opt);
}

ModelFit fit_linear_odds(const Dataset& data, const Formula& f, const FitOptions& opt) {
  return fit_bernoulli(build_design(data, f), Link::linear_odds, opt);
}

// ---------------------------------------------------------------------------
// ModelFit accessors

ModelFit ModelFit::from_estimates(Link link, std::vector<std::string> names,
                                  std::vector<double> estimates, std::vector<double> se) {
  if (names.size() != estimates.size() || names.size() != se.size())
    throw UsageError("names, estimates and standard errors differ in length");
  ModelFit f;
  f.link = link;
  f.names = std::move(names);
  const auto k = static_cast<Eigen::Index>(estimates.size());
  f.coef = Eigen::Map<const VectorXd>(estimates.data(), k);
  f.cov = MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!(se[i] >= 0)) throw UsageError("standard errors must be non-negative");
    f.cov(i, i) = se[i] * se[i];
  }
  f.diagnostics.converged = true;
  return f;
}

std::optional<std::size_t> ModelFit::index(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

std::size_t ModelFit::require(const std::string& name) const {
  if (auto i = index(name)) return *i;
  throw UsageError("the fit has no coefficient named '" + name + "'");
}

double ModelFit::se(const std::string& name) const {
  const auto i = static_cast<Eigen::Index>(require(name));
  return std::sqrt(cov(i, i));
}

// ---------------------------------------------------------------------------
// Cell contrasts

CellCoding standard_cell_coding(const std::string& intercept, const std::string& a,
                                const std::string& b, const std::string& interaction,
                                std::optional<std::string> trend) {
  CellCoding c;
  c.cell11 = {{intercept, 1}, {a, 1}, {b, 1}, {interaction, 1}};
  c.cell10 = {{intercept, 1}, {a, 1}};
  c.cell01 = {{intercept, 1}, {b, 1}};
  c.trend = std::move(trend);
  return c;
}

namespace {

VectorXd cell_pattern(const ModelFit& fit, const std::map<std::string, double>& cell,
                      const std::optional<std::string>& trend, double t) {
  VectorXd x = VectorXd::Zero(fit.coef.size());
  for (const auto& [name, value] : cell) x(static_cast<Eigen::Index>(fit.require(name))) += value;
  if (trend) x(static_cast<Eigen::Index>(fit.require(*trend))) += t;
  return x;
}

TestResult contrast_test(const ModelFit& fit, const CellCoding& coding, double t) {
  if (!std::isfinite(t)) throw UsageError("trend value must be finite");
  const VectorXd x11 = cell_pattern(fit, coding.cell11, coding.trend, t);
  const VectorXd x10 = cell_pattern(fit, coding.cell10, coding.trend, t);
  const VectorXd x01 = cell_pattern(fit, coding.cell01, coding.trend, t);
  const VectorXd w = x11 - x10 - x01;

  TestResult r;
  r.cells = {x11.dot(fit.coef), x10.dot(fit.coef), x01.dot(fit.coef)};
  r.statistic = w.dot(fit.coef);
  r.se = std::sqrt(std::max(0.0, w.dot(fit.cov * w)));
  fill_normal_test(r);
  return r;
}

}  // namespace

Eigen::VectorXd excess_contrast(const ModelFit& fit, const CellCoding& coding, double t) {
  return cell_pattern(fit, coding.cell11, coding.trend, t) -
         cell_pattern(fit, coding.cell10, coding.trend, t) -
         cell_pattern(fit, coding.cell01, coding.trend, t);
}

TestResult model_excess_risk(const ModelFit& fit, const CellCoding& coding, double t) {
  if (fit.link != Link::linear_risk)
    throw UsageError("model_excess_risk needs a linear-risk fit; use rare_disease_excess for odds");
  TestResult r = contrast_test(fit, coding, t);
  r.method = "linear-risk model";
  if (coding.trend) {
    std::ostringstream os;
    os << "trend '" << *coding.trend << "' evaluated at " << t;
    r.notes.push_back(os.str());
  }
  if (fit.diagnostics.active_constraints > 0)
    r.notes.push_back(std::to_string(fit.diagnostics.active_constraints) +
                      " fitted risks sit on the [eps, 1-eps] boundary");
  return r;
}

TestResult rare_disease_excess(const ModelFit& fit, const CellCoding& coding, double t) {
  if (fit.link != Link::linear_odds)
    throw UsageError("rare_disease_excess needs a linear-odds fit");
  TestResult r = contrast_test(fit, coding, t);
  r.method = "linear-odds model";
  r.notes.push_back("sign-valid under rare-disease assumption; cells are odds, not risks");
  return r;
}

TestResult rare_disease_excess(const ModelFit& fit) {
  const std::string a = kAlphaColumn, b = kBetaColumn;
  return rare_disease_excess(fit, standard_cell_coding("(Intercept)", a, b, a + ":" + b));
}

}  // namespace coact::estimation
