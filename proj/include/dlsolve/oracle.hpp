#pragma once

// Independent checks for the walk-sum theory behind the message-passing
// solver: walk weights and enumerated walk sums, the closed-form (Schur
// complement) value of every message on a tree, and computation trees that
// reproduce loopy-graph runs exactly.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dlsolve/analysis.hpp"
#include "dlsolve/core.hpp"

namespace dlsolve {

/// Guards keeping brute-force checks in the seconds range.
struct OracleLimits {
  std::size_t max_enum_nodes = 8;
  std::size_t max_enum_length = 10;
  std::size_t max_unwrapped_nodes = 20000;
  /// Largest unwrapped tree solved with dense LU; bigger ones use
  /// leaf-to-root elimination on the explicit tree matrix.
  std::size_t max_dense_nodes = 2000;
};

struct Walk {
  std::vector<NodeId> nodes;

  std::size_t length() const { return nodes.empty() ? 0 : nodes.size() - 1; }
};

/// Product of r_{w_{k-1} w_k} along the walk; 1 for a zero-length walk.
/// Throws InvalidWalk for an empty walk or a step that is not an edge of the
/// induced graph of R.
double walk_weight(const ResidualMatrix& r, const Walk& w);

/// Sum of weights over a set of walks; 0 for the empty set.
double walk_set_weight(const ResidualMatrix& r, std::span<const Walk> walks);

/// All walks of exactly `length` steps from i to j in the induced graph of R.
std::vector<Walk> enumerate_walks(const ResidualMatrix& r, NodeId i, NodeId j, std::size_t length);

struct PartialWalkSum {
  /// sum over enumerated walks i -> j of length <= L.
  double enumerated = 0.0;
  /// sum_{l=0}^{L} (R^l)_ij.
  double matrix_power = 0.0;
};

/// Both routes to sum_{l <= L} (R^l)_ij. Throws TooLarge past the guards.
PartialWalkSum partial_walk_sum(const ResidualMatrix& r, NodeId i, NodeId j, std::size_t max_length,
                                const OracleLimits& limits = {});

/// Nodes within k hops of i after deleting j and everything reachable only
/// through it; sorted ascending. Throws NotAnEdge if (i, j) is not an edge.
std::vector<NodeId> restricted_subgraph(const UndirectedGraph& g, NodeId i, NodeId j, std::size_t k);

struct MessageValue {
  double a = 0.0;
  double b = 0.0;
};

/// Closed form of the message i -> j after k rounds on a tree: with S the
/// restricted subgraph, a is the Schur complement of A_S onto node i and b the
/// matching eliminated right-hand side, so b / a is x_i of A_S x = b_S.
MessageValue message_oracle(const SparseSystem& sys, NodeId i, NodeId j, std::size_t k);

struct UnwrappedNode {
  std::size_t id = 0;
  NodeId original = 0;
  std::optional<std::size_t> parent;
  std::size_t depth = 0;
};

/// Computation tree of depth t rooted at `root`, listed breadth first. A node
/// whose original is o and whose parent's original is p gets one child per
/// neighbor of o other than p, in ascending original id.
struct UnwrappedTree {
  std::vector<UnwrappedNode> nodes;
  std::size_t root = 0;

  std::vector<std::size_t> layer_sizes() const;
};

UnwrappedTree unwrap_tree(const UndirectedGraph& g, NodeId root, std::size_t t);

/// Linear system on an unwrapped tree: replicas copy a_oo and b_o, each tree
/// edge copies a_{PC} and a_{CP} of the originals.
SparseSystem unwrapped_system(const SparseSystem& sys, const UnwrappedTree& tree);

struct UnwrappedCheck {
  double root_solution = 0.0;
  double bp_estimate = 0.0;
  bool matches = false;
};

/// Solves the unwrapped system directly and compares its root component with
/// x^_i(t) from t message-passing rounds on the original graph, at relative
/// tolerance rel_tol. Throws TooLarge when the tree exceeds the guard.
UnwrappedCheck unwrapped_equivalence_check(const SparseSystem& sys, NodeId i, std::size_t t,
                                           double rel_tol = 1e-10, const OracleLimits& limits = {});

}  // namespace dlsolve
