#include "coact/adag.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>

#include "coact/errors.hpp"

namespace coact::adag {

const char* to_string(Status s) {
  switch (s) {
    case Status::holds: return "holds";
    case Status::fails: return "fails";
    case Status::asserted_only: return "asserted-only";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Graph

Adag::Adag(std::vector<Node> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  std::map<std::string, std::size_t> ids;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id.empty()) throw UsageError("graph node with empty id");
    if (!ids.emplace(nodes_[i].id, i).second)
      throw UsageError("duplicate graph node '" + nodes_[i].id + "'");
  }
  parents_.assign(nodes_.size(), {});
  children_.assign(nodes_.size(), {});
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& [from, to] : edges_) {
    auto f = ids.find(from), t = ids.find(to);
    if (f == ids.end()) throw UsageError("edge from unknown node '" + from + "'");
    if (t == ids.end()) throw UsageError("edge to unknown node '" + to + "'");
    if (f->second == t->second) throw UsageError("self-loop on '" + from + "'");
    if (!seen.emplace(f->second, t->second).second) continue;
    children_[f->second].push_back(t->second);
    parents_[t->second].push_back(f->second);
  }
  auto by_id = [this](std::size_t a, std::size_t b) { return nodes_[a].id < nodes_[b].id; };
  for (auto& v : parents_) std::sort(v.begin(), v.end(), by_id);
  for (auto& v : children_) std::sort(v.begin(), v.end(), by_id);

  // Kahn's algorithm for acyclicity.
  std::vector<std::size_t> indeg(nodes_.size());
  std::deque<std::size_t> ready;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    indeg[i] = parents_[i].size();
    if (indeg[i] == 0) ready.push_back(i);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    auto n = ready.front();
    ready.pop_front();
    ++visited;
    for (auto ch : children_[n])
      if (--indeg[ch] == 0) ready.push_back(ch);
  }
  if (visited != nodes_.size()) throw UsageError("graph has a directed cycle");

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.kind != NodeKind::regime) continue;
    if (!parents_[i].empty())
      throw UsageError("regime indicator '" + n.id + "' must not have parents");
    auto g = ids.find(n.governs);
    if (g == ids.end())
      throw UsageError("regime indicator '" + n.id + "' governs unknown node '" + n.governs + "'");
    if (nodes_[g->second].kind != NodeKind::variable)
      throw UsageError("regime indicator '" + n.id + "' must govern a domain variable");
    if (!has_edge(i, g->second))
      throw UsageError("regime indicator '" + n.id + "' has no edge into '" + n.governs + "'");
  }
}

std::optional<std::size_t> Adag::find(const std::string& id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].id == id) return i;
  return std::nullopt;
}

std::size_t Adag::index_of(const std::string& id) const {
  if (auto i = find(id)) return *i;
  throw UsageError("unknown graph node '" + id + "'");
}

bool Adag::has_edge(std::size_t from, std::size_t to) const {
  const auto& ch = children_.at(from);
  return std::find(ch.begin(), ch.end(), to) != ch.end();
}

std::optional<std::size_t> Adag::regime_for(std::size_t var) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].kind == NodeKind::regime && nodes_[i].governs == nodes_.at(var).id) return i;
  return std::nullopt;
}

std::vector<char> Adag::ancestral_closure(const std::vector<char>& seed) const {
  std::vector<char> in(seed);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < in.size(); ++i)
    if (in[i]) stack.push_back(i);
  while (!stack.empty()) {
    auto n = stack.back();
    stack.pop_back();
    for (auto p : parents_[n])
      if (!in[p]) {
        in[p] = 1;
        stack.push_back(p);
      }
  }
  return in;
}

// ---------------------------------------------------------------------------
// d-separation

namespace {

struct Query {
  std::vector<char> x, y, z;
};

Query resolve(const Adag& g, const NodeSet& x, const NodeSet& y, const NodeSet& z) {
  Query q{std::vector<char>(g.size(), 0), std::vector<char>(g.size(), 0),
          std::vector<char>(g.size(), 0)};
  auto mark = [&](const NodeSet& s, std::vector<char>& m) {
    for (const auto& id : s) {
      auto i = g.index_of(id);
      if (q.x[i] || q.y[i] || q.z[i])
        throw UsageError("node '" + id + "' appears in more than one set of the query");
      m[i] = 1;
    }
  };
  mark(x, q.x);
  mark(y, q.y);
  mark(z, q.z);
  return q;
}

bool any(const std::vector<char>& v) { return std::find(v.begin(), v.end(), 1) != v.end(); }

}  // namespace

bool d_separated(const Adag& g, const NodeSet& x, const NodeSet& y, const NodeSet& z) {
  const Query q = resolve(g, x, y, z);
  if (!any(q.x) || !any(q.y)) return true;

  std::vector<char> seed(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) seed[i] = q.x[i] || q.y[i] || q.z[i];
  const auto anc = g.ancestral_closure(seed);

  // Moral graph of the ancestral set: skeleton plus married co-parents.
  std::vector<std::vector<std::size_t>> adj(g.size());
  auto link = [&](std::size_t a, std::size_t b) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  };
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (!anc[v]) continue;
    const auto& ps = g.parents(v);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      link(ps[i], v);
      for (std::size_t j = i + 1; j < ps.size(); ++j) link(ps[i], ps[j]);
    }
  }

  std::vector<char> seen(g.size(), 0);
  std::deque<std::size_t> frontier;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (q.x[i]) {
      seen[i] = 1;
      frontier.push_back(i);
    }
  while (!frontier.empty()) {
    auto n = frontier.front();
    frontier.pop_front();
    if (q.y[n]) return false;
    for (auto m : adj[n])
      if (!seen[m] && !q.z[m]) {
        seen[m] = 1;
        frontier.push_back(m);
      }
  }
  return true;
}

std::optional<std::vector<std::string>> find_active_path(const Adag& g, const NodeSet& x,
                                                         const NodeSet& y, const NodeSet& z) {
  const Query q = resolve(g, x, y, z);

  // A collider is open when it or one of its descendants is conditioned on.
  std::vector<char> opens_collider(g.size(), 0);
  {
    const auto anc_z = g.ancestral_closure(q.z);
    for (std::size_t i = 0; i < g.size(); ++i) opens_collider[i] = anc_z[i];
  }

  std::vector<std::size_t> order(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](auto a, auto b) { return g.node(a).id < g.node(b).id; });

  // Skeleton neighbours sorted by id.
  std::vector<std::vector<std::size_t>> nbr(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) {
    nbr[v] = g.parents(v);
    nbr[v].insert(nbr[v].end(), g.children(v).begin(), g.children(v).end());
    std::sort(nbr[v].begin(), nbr[v].end(),
              [&](auto a, auto b) { return g.node(a).id < g.node(b).id; });
  }

  std::vector<std::size_t> path;
  std::vector<char> on_path(g.size(), 0);

  std::function<bool(std::size_t)> extend = [&](std::size_t n) -> bool {
    for (auto m : nbr[n]) {
      if (on_path[m] || q.x[m]) continue;
      // n is an interior node once m is appended; check it is open.
      if (path.size() >= 2) {
        const auto p = path[path.size() - 2];
        const bool collider = g.has_edge(p, n) && g.has_edge(m, n);
        const bool open = collider ? opens_collider[n] : !q.z[n];
        if (!open) continue;
      }
      path.push_back(m);
      on_path[m] = 1;
      if (q.y[m]) return true;
      if (extend(m)) return true;
      on_path[m] = 0;
      path.pop_back();
    }
    return false;
  };

  for (auto s : order) {
    if (!q.x[s]) continue;
    path.assign(1, s);
    std::fill(on_path.begin(), on_path.end(), 0);
    on_path[s] = 1;
    if (extend(s)) {
      std::vector<std::string> ids;
      for (auto v : path) ids.push_back(g.node(v).id);
      return ids;
    }
  }
  return std::nullopt;
}

std::string format_path(const Adag& g, const std::vector<std::string>& path) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) {
      const auto a = g.index_of(path[i - 1]), b = g.index_of(path[i]);
      out += g.has_edge(a, b) ? " -> " : " <- ";
    }
    out += path[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Identifiability conditions

namespace {

std::string join(const NodeSet& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ", " : "") + s[i];
  return out;
}

std::string group(const NodeSet& s) {
  if (s.empty()) return "{}";
  return s.size() == 1 ? s[0] : "(" + join(s) + ")";
}

NodeSet concat(std::initializer_list<NodeSet> parts) {
  NodeSet out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

NodeSet sigma_of(const Adag& g, const RoleAssignment& r) {
  NodeSet out;
  for (const auto* v : {&r.a, &r.b}) {
    auto reg = g.regime_for(g.index_of(*v));
    if (!reg) throw UsageError("'" + *v + "' has no regime indicator");
    out.push_back(g.node(*reg).id);
  }
  return out;
}

ConditionVerdict independence(const Adag& g, int number, const NodeSet& x, const NodeSet& y,
                              const NodeSet& z) {
  ConditionVerdict v;
  v.number = number;
  v.statement = group(x) + " _||_ " + group(y) + " | " + group(z);
  if (d_separated(g, x, y, z)) {
    v.status = Status::holds;
  } else {
    v.status = Status::fails;
    if (auto p = find_active_path(g, x, y, z)) v.active_path = *p;
  }
  return v;
}

}  // namespace

bool ConditionReport::graph_conditions_hold() const {
  return conditions[1].status == Status::holds && conditions[2].status == Status::holds &&
         conditions[3].status == Status::holds;
}

void validate_roles(const Adag& g, const RoleAssignment& r) {
  std::set<std::string> used;
  auto claim = [&](const std::string& id, const char* role, bool regime_allowed) {
    auto i = g.index_of(id);
    if (!regime_allowed && g.node(i).kind == NodeKind::regime)
      throw UsageError(std::string("regime indicator '") + id + "' cannot take role " + role);
    if (!used.insert(id).second)
      throw UsageError("node '" + id + "' is assigned more than one role");
  };
  claim(r.a, "A", false);
  claim(r.b, "B", false);
  claim(r.y, "Y", false);
  for (const auto& c : r.c) claim(c, "C", false);
  for (const auto& u : r.u) claim(u, "U", false);
  if (g.regime_for(g.index_of(r.y)))
    throw UsageError("outcome '" + r.y + "' must not have a regime indicator");
  sigma_of(g, r);
}

ConditionReport check_core_conditions(const Adag& g, const RoleAssignment& r) {
  validate_roles(g, r);
  ConditionReport rep;
  rep.roles = r;
  rep.sigma = sigma_of(g, r);
  const NodeSet ab{r.a, r.b};

  ConditionVerdict c1;
  c1.number = 1;
  c1.statement = r.y + " = f(" + join(concat({ab, r.c, r.u})) + ")";
  c1.status = Status::asserted_only;
  c1.asserted = r.asserted_functional;
  rep.conditions[0] = c1;
  rep.conditions[1] = independence(g, 2, {r.y}, rep.sigma, concat({ab, r.c, r.u}));
  rep.conditions[2] = independence(g, 3, r.u, concat({ab, rep.sigma}), r.c);
  rep.conditions[3] = independence(g, 4, {r.a}, {r.b}, concat({r.c, rep.sigma}));
  rep.corollary = independence(g, 0, {r.y}, rep.sigma, concat({ab, r.c}));

  if (rep.conditions[1].status == Status::holds && rep.conditions[2].status == Status::holds &&
      rep.corollary.status != Status::holds) {
    rep.internal_error = true;
    rep.internal_error_message =
        "conditions 2 and 3 hold but " + rep.corollary.statement + " does not";
  }
  return rep;
}

SufficiencyResult check_sufficient_covariate(const Adag& g, const RoleAssignment& r,
                                             const NodeSet& c) {
  RoleAssignment with_c = r;
  with_c.c = c;
  with_c.u.clear();
  validate_roles(g, with_c);
  const NodeSet sigma = sigma_of(g, r);

  SufficiencyResult res;
  if (!d_separated(g, c, sigma, {})) {
    res.holds = false;
    res.failed_clause = 1;
    if (auto p = find_active_path(g, c, sigma, {})) res.active_path = *p;
    return res;
  }
  const NodeSet given = concat({{r.a, r.b}, c});
  if (!d_separated(g, {r.y}, sigma, given)) {
    res.holds = false;
    res.failed_clause = 2;
    if (auto p = find_active_path(g, {r.y}, sigma, given)) res.active_path = *p;
  }
  return res;
}

std::vector<NodeSet> search_admissible_c(const Adag& g, const RoleAssignment& r,
                                         const NodeSet& pool, std::size_t cap) {
  if (pool.size() > cap)
    throw UsageError("candidate pool has " + std::to_string(pool.size()) +
                     " nodes; the search cap is " + std::to_string(cap));
  NodeSet sorted = pool;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw UsageError("candidate pool lists a node twice");
  for (const auto& id : sorted) {
    g.index_of(id);
    if (id == r.a || id == r.b || id == r.y ||
        std::find(r.u.begin(), r.u.end(), id) != r.u.end())
      throw UsageError("candidate '" + id + "' already has a role");
  }

  std::vector<NodeSet> subsets;
  const std::size_t n = sorted.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    NodeSet s;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) s.push_back(sorted[i]);
    subsets.push_back(std::move(s));
  }
  std::sort(subsets.begin(), subsets.end(), [](const NodeSet& a, const NodeSet& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });

  std::vector<NodeSet> admissible;
  for (auto& s : subsets) {
    RoleAssignment trial = r;
    trial.c = s;
    if (check_core_conditions(g, trial).graph_conditions_hold()) admissible.push_back(s);
  }
  return admissible;
}

}  // namespace coact::adag
