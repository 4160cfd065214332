#pragma once

// Augmented DAGs: ordinary domain variables plus regime indicators (one per
// intervenable variable). Regime indicators are queried like any other node.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace coact::adag {

enum class NodeKind { variable, regime };

struct Node {
  std::string id;
  NodeKind kind = NodeKind::variable;
  std::string governs;  // regime indicators only
};

using NodeSet = std::vector<std::string>;
using Edge = std::pair<std::string, std::string>;

class Adag {
public:
  /// Throws UsageError on unknown endpoints, duplicate ids, cycles, or a
  /// regime indicator with parents / without an edge into its variable.
  Adag(std::vector<Node> nodes, std::vector<Edge> edges);

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t i) const { return nodes_.at(i); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }

  std::optional<std::size_t> find(const std::string& id) const;
  std::size_t index_of(const std::string& id) const;

  /// Sorted by node id.
  const std::vector<std::size_t>& parents(std::size_t i) const { return parents_[i]; }
  const std::vector<std::size_t>& children(std::size_t i) const { return children_[i]; }
  bool has_edge(std::size_t from, std::size_t to) const;

  /// The regime indicator governing variable `var`, if any.
  std::optional<std::size_t> regime_for(std::size_t var) const;

  /// Ancestors of `seed`, including the seed nodes themselves.
  std::vector<char> ancestral_closure(const std::vector<char>& seed) const;

private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> parents_, children_;
};

/// X and Y d-separated by Z, decided by the moralisation criterion on the
/// ancestral graph of X u Y u Z. Sets must be disjoint and name existing nodes.
bool d_separated(const Adag& g, const NodeSet& x, const NodeSet& y, const NodeSet& z);

/// The lexicographically first path (by node id) from X to Y that is active
/// given Z, or empty when X and Y are d-separated.
std::optional<std::vector<std::string>> find_active_path(const Adag& g, const NodeSet& x,
                                                         const NodeSet& y, const NodeSet& z);

/// "U -> Z <- A"
std::string format_path(const Adag& g, const std::vector<std::string>& path);

struct RoleAssignment {
  std::string a, b, y;
  NodeSet c;
  NodeSet u;
  bool asserted_functional = false;
};

enum class Status { holds, fails, asserted_only };
const char* to_string(Status s);

struct ConditionVerdict {
  int number = 0;          // 1..4 for core conditions, 0 for the corollary
  std::string statement;   // e.g. "Y _||_ (sigma_A, sigma_B) | (A, B, C, U)"
  Status status = Status::holds;
  bool asserted = false;   // condition 1 only
  std::vector<std::string> active_path;  // evidence when status == fails
};

struct ConditionReport {
  RoleAssignment roles;
  NodeSet sigma;
  std::array<ConditionVerdict, 4> conditions;
  ConditionVerdict corollary;  // Y _||_ sigma | (A, B, C)
  bool internal_error = false;
  std::string internal_error_message;

  /// Conditions 2-4 all hold on the graph.
  bool graph_conditions_hold() const;
};

/// Rejects roles that overlap, name regime indicators as Y/C/U, or leave A or
/// B without a regime indicator.
void validate_roles(const Adag& g, const RoleAssignment& roles);

ConditionReport check_core_conditions(const Adag& g, const RoleAssignment& roles);

struct SufficiencyResult {
  bool holds = true;
  int failed_clause = 0;  // 1: C _||_ sigma, 2: Y _||_ sigma | (A, B, C)
  std::vector<std::string> active_path;
};

/// C is a sufficient covariate for the joint effect of (A, B) on Y.
SufficiencyResult check_sufficient_covariate(const Adag& g, const RoleAssignment& roles,
                                             const NodeSet& c);

/// Every subset of `pool` that, used as C, satisfies core conditions 2-4.
/// Ordered by size, then lexicographically. UsageError if |pool| > cap.
std::vector<NodeSet> search_admissible_c(const Adag& g, const RoleAssignment& roles,
                                         const NodeSet& pool, std::size_t cap = 16);

}  // namespace coact::adag
