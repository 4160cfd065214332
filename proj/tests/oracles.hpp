#pragma once

// Independent reference implementations used only by the tests. None of
// these call into the library's algorithms; they share only the data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coact/adag.hpp"
#include "coact/mechanism.hpp"
#include "coact/rng.hpp"
#include "coact/simulator.hpp"

namespace oracle {

using coact::mechanism::Context;
using coact::mechanism::Factor;
using coact::mechanism::ResponseFunction;

// ---- d-separation by enumerating every simple path -------------------------

struct PlainDag {
  std::size_t n = 0;
  std::vector<std::vector<char>> edge;  // edge[i][j]: i -> j

  explicit PlainDag(std::size_t n_) : n(n_), edge(n_, std::vector<char>(n_, 0)) {}

  bool is_descendant_in(std::size_t v, const std::vector<char>& z) const {
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{v};
    seen[v] = 1;
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      if (z[u]) return true;
      for (std::size_t w = 0; w < n; ++w)
        if (edge[u][w] && !seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
    }
    return false;
  }
};

inline bool path_active(const PlainDag& g, const std::vector<std::size_t>& path,
                        const std::vector<char>& z) {
  for (std::size_t k = 1; k + 1 < path.size(); ++k) {
    auto prev = path[k - 1], mid = path[k], next = path[k + 1];
    bool collider = g.edge[prev][mid] && g.edge[next][mid];
    if (collider) {
      if (!g.is_descendant_in(mid, z)) return false;
    } else if (z[mid]) {
      return false;
    }
  }
  return true;
}

inline bool any_active_path(const PlainDag& g, std::size_t from, const std::vector<char>& y,
                            const std::vector<char>& z, std::vector<std::size_t>& path,
                            std::vector<char>& on_path) {
  auto cur = path.back();
  if (path.size() > 1 && y[cur]) return path_active(g, path, z);
  for (std::size_t w = 0; w < g.n; ++w) {
    if (on_path[w] || !(g.edge[cur][w] || g.edge[w][cur])) continue;
    path.push_back(w);
    on_path[w] = 1;
    bool found = any_active_path(g, from, y, z, path, on_path);
    on_path[w] = 0;
    path.pop_back();
    if (found) return true;
  }
  return false;
}

/// X and Y d-separated by Z iff no simple path between them is active.
inline bool d_separated(const PlainDag& g, const std::vector<char>& x, const std::vector<char>& y,
                        const std::vector<char>& z) {
  for (std::size_t s = 0; s < g.n; ++s) {
    if (!x[s]) continue;
    std::vector<std::size_t> path{s};
    std::vector<char> on_path(g.n, 0);
    on_path[s] = 1;
    if (any_active_path(g, s, y, z, path, on_path)) return false;
  }
  return true;
}

/// Random DAG on nodes "n0".."n{k-1}" with edges only from lower to higher index.
inline PlainDag random_dag(coact::rng::Stream& rng, std::size_t n, double density) {
  PlainDag g(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(density)) g.edge[i][j] = 1;
  return g;
}

inline coact::adag::Adag to_adag(const PlainDag& g) {
  std::vector<coact::adag::Node> nodes;
  std::vector<coact::adag::Edge> edges;
  for (std::size_t i = 0; i < g.n; ++i) nodes.push_back({"n" + std::to_string(i)});
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < g.n; ++j)
      if (g.edge[i][j]) edges.push_back({"n" + std::to_string(i), "n" + std::to_string(j)});
  return coact::adag::Adag(std::move(nodes), std::move(edges));
}

// ---- interference straight from the definition -----------------------------

/// `actor` interferes with the other factor: in some context the other factor
/// is not irrelevant, and some level of `actor` gives Y = 0 whatever the other
/// factor does. `only_c` restricts the search to one stratum of C.
inline bool interferes(const ResponseFunction& f, Factor actor,
                       std::optional<std::size_t> only_c = {}) {
  const auto& dx = f.domain(actor);
  const auto& dy = f.domain(coact::mechanism::other(actor));
  auto val = [&](std::size_t x, std::size_t y, Context ctx) {
    return actor == Factor::A ? f(x, y, ctx.c, ctx.u) : f(y, x, ctx.c, ctx.u);
  };
  for (std::size_t c = 0; c < f.domain_c().size(); ++c)
    for (std::size_t u = 0; u < f.domain_u().size(); ++u) {
      if (only_c && c != *only_c) continue;
      Context ctx{c, u};
      bool other_matters = false;
      for (std::size_t x = 0; x < dx.size() && !other_matters; ++x)
        for (std::size_t y1 = 0; y1 < dy.size(); ++y1)
          for (std::size_t y2 = 0; y2 < dy.size(); ++y2)
            if (val(x, y1, ctx) != val(x, y2, ctx)) other_matters = true;
      if (!other_matters) continue;
      for (std::size_t x = 0; x < dx.size(); ++x) {
        bool blocks = true;
        for (std::size_t y = 0; y < dy.size(); ++y) blocks = blocks && val(x, y, ctx) == 0;
        if (blocks) return true;
      }
    }
  return false;
}

// ---- cell risks by enumerating the full observational joint law ------------

/// P(Y=1 | alpha=i, beta=j, C=c) from P(c) P(u|c) P(a|c) P(b|c) f(a,b,c,u).
inline double joint_cell_risk(const coact::simulator::Scenario& s,
                              const coact::mechanism::ValueSet& alpha,
                              const coact::mechanism::ValueSet& beta, int i, int j,
                              std::size_t c) {
  const auto& f = s.response;
  double num = 0, den = 0;
  for (std::size_t a = 0; a < f.domain_a().size(); ++a) {
    if (alpha.contains(f.domain_a().value(a)) != (i == 1)) continue;
    for (std::size_t b = 0; b < f.domain_b().size(); ++b) {
      if (beta.contains(f.domain_b().value(b)) != (j == 1)) continue;
      for (std::size_t u = 0; u < f.domain_u().size(); ++u) {
        double p = s.p_c[c] * s.p_u_given_c[c][u] * s.p_a_given_c[c][a] * s.p_b_given_c[c][b];
        den += p;
        num += p * f(a, b, c, u);
      }
    }
  }
  return num / den;
}

// ---- Bernoulli MLE by iteratively reweighted least squares ------------------

/// Identity or odds-identity link fit for an interior optimum. Returns the
/// coefficients and the inverse observed information.
struct IrlsFit {
  Eigen::VectorXd coef;
  Eigen::MatrixXd cov;
  bool ok = false;
};

inline IrlsFit irls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool odds_link) {
  IrlsFit out;
  const auto n = x.rows();
  auto feasible = [&](const Eigen::VectorXd& beta) {
    Eigen::VectorXd eta = x * beta;
    for (Eigen::Index r = 0; r < n; ++r) {
      double mu = odds_link ? eta(r) / (1 + eta(r)) : eta(r);
      if (!(mu > 0 && mu < 1) || (odds_link && eta(r) <= 0)) return false;
    }
    return true;
  };
  // Start from the constant model fitted by least squares.
  double ybar = std::clamp(y.mean(), 0.05, 0.95);
  Eigen::VectorXd target = Eigen::VectorXd::Constant(n, odds_link ? ybar / (1 - ybar) : ybar);
  Eigen::VectorXd beta = x.colPivHouseholderQr().solve(target);
  if (!feasible(beta)) return out;
  for (int it = 0; it < 500; ++it) {
    Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd w(n), z(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      double e = eta(r);
      double mu = odds_link ? e / (1 + e) : e;
      double dmu = odds_link ? 1 / ((1 + e) * (1 + e)) : 1.0;
      w(r) = dmu * dmu / (mu * (1 - mu));
      z(r) = e + (y(r) - mu) / dmu;
    }
    Eigen::MatrixXd xtwx = x.transpose() * w.asDiagonal() * x;
    Eigen::VectorXd next = xtwx.ldlt().solve(x.transpose() * w.asDiagonal() * z);
    for (int halve = 0; halve < 60 && !feasible(next); ++halve) next = (beta + next) / 2;
    if (!feasible(next)) return out;
    double step = (next - beta).norm();
    beta = next;
    if (step < 1e-13) break;
  }
  // Observed information: minus the Hessian of the log-likelihood in eta.
  Eigen::VectorXd eta = x * beta;
  Eigen::VectorXd w(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    double e = eta(r);
    if (odds_link)
      w(r) = y(r) / (e * e) - 1 / ((1 + e) * (1 + e));
    else
      w(r) = y(r) / (e * e) + (1 - y(r)) / ((1 - e) * (1 - e));
  }
  out.coef = beta;
  out.cov = (x.transpose() * w.asDiagonal() * x).inverse();
  out.ok = true;
  return out;
}

}  // namespace oracle
