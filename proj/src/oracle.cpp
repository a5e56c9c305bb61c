#include "dlsolve/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "dlsolve/engine.hpp"
#include "dlsolve/solvers.hpp"

namespace dlsolve {

double walk_weight(const ResidualMatrix& r, const Walk& w) {
  if (w.nodes.empty()) throw Error(ErrorKind::InvalidWalk, "a walk visits at least one node");
  for (NodeId v : w.nodes) {
    if (v >= r.n()) throw Error(ErrorKind::InvalidWalk, "walk node out of range");
  }
  double phi = 1.0;
  for (std::size_t k = 1; k < w.nodes.size(); ++k) {
    const NodeId u = w.nodes[k - 1], v = w.nodes[k];
    const double forward = r.at(u, v);
    if (u == v || (forward == 0.0 && r.at(v, u) == 0.0)) {
      throw Error(ErrorKind::InvalidWalk, "step (" + std::to_string(u + 1) + ", " +
                                              std::to_string(v + 1) + ") is not an edge");
    }
    phi *= forward;
  }
  return phi;
}

double walk_set_weight(const ResidualMatrix& r, std::span<const Walk> walks) {
  double s = 0.0;
  for (const auto& w : walks) s += walk_weight(r, w);
  return s;
}

std::vector<Walk> enumerate_walks(const ResidualMatrix& r, NodeId i, NodeId j, std::size_t length) {
  const auto g = induced_graph(r.matrix());
  std::vector<Walk> out;
  Walk cur{{i}};
  // Explicit DFS stack of next-neighbor positions.
  std::vector<std::size_t> next{0};
  while (!next.empty()) {
    const NodeId u = cur.nodes.back();
    if (cur.length() == length) {
      if (u == j) out.push_back(cur);
      cur.nodes.pop_back();
      next.pop_back();
      continue;
    }
    const auto nb = g.neighbors(u);
    std::size_t& pos = next.back();
    if (pos == nb.size()) {
      cur.nodes.pop_back();
      next.pop_back();
      continue;
    }
    cur.nodes.push_back(nb[pos++]);
    next.push_back(0);
  }
  return out;
}

namespace {

// Sum of weights of all walks of each length <= L from `from`, ending at `to`,
// accumulated depth-first without materializing the walks.
void enumerate_sum(const UndirectedGraph& g, const SparseMatrix& r, NodeId u, NodeId to,
                   std::size_t depth, std::size_t max_length, double weight, double& total) {
  if (u == to) total += weight;
  if (depth == max_length) return;
  for (NodeId v : g.neighbors(u)) {
    enumerate_sum(g, r, v, to, depth + 1, max_length, weight * r.at(u, v), total);
  }
}

}  // namespace

PartialWalkSum partial_walk_sum(const ResidualMatrix& r, NodeId i, NodeId j, std::size_t max_length,
                                const OracleLimits& limits) {
  if (r.n() > limits.max_enum_nodes || max_length > limits.max_enum_length) {
    throw Error(ErrorKind::TooLarge, "walk enumeration guard exceeded");
  }
  if (i >= r.n() || j >= r.n()) throw Error(ErrorKind::InvalidInput, "node out of range");
  PartialWalkSum out;
  const auto g = induced_graph(r.matrix());
  enumerate_sum(g, r.matrix(), i, j, 0, max_length, 1.0, out.enumerated);

  // Row vector e_i^T R^l, l = 0..L.
  std::vector<double> row(r.n(), 0.0), next(r.n());
  row[i] = 1.0;
  out.matrix_power = row[j];
  for (std::size_t l = 1; l <= max_length; ++l) {
    std::fill(next.begin(), next.end(), 0.0);
    for (NodeId a = 0; a < r.n(); ++a) {
      if (row[a] == 0.0) continue;
      const auto cols = r.matrix().row_cols(a);
      const auto vals = r.matrix().row_values(a);
      for (std::size_t p = 0; p < cols.size(); ++p) next[cols[p]] += row[a] * vals[p];
    }
    row.swap(next);
    out.matrix_power += row[j];
  }
  return out;
}

std::vector<NodeId> restricted_subgraph(const UndirectedGraph& g, NodeId i, NodeId j, std::size_t k) {
  if (!g.has_edge(i, j)) {
    throw Error(ErrorKind::NotAnEdge,
                "(" + std::to_string(i + 1) + ", " + std::to_string(j + 1) + ") is not an edge");
  }
  constexpr auto kUnseen = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(g.n(), kUnseen);
  dist[i] = 0;
  dist[j] = 0;  // blocked
  std::vector<NodeId> out{i};
  std::deque<NodeId> queue{i};
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    if (dist[u] == k) continue;
    for (NodeId v : g.neighbors(u)) {
      if (dist[v] != kUnseen) continue;
      dist[v] = dist[u] + 1;
      out.push_back(v);
      queue.push_back(v);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

MessageValue message_oracle(const SparseSystem& sys, NodeId i, NodeId j, std::size_t k) {
  const auto g = induced_graph(sys);
  const auto subset = restricted_subgraph(g, i, j, k);
  std::vector<NodeId> others;
  for (NodeId s : subset) {
    if (s != i) others.push_back(s);
  }
  MessageValue out{sys.diag(i), sys.rhs()[i]};
  if (others.empty()) return out;

  const std::size_t m = others.size();
  DenseMatrix block(m);
  std::vector<double> col_i(m), rhs(m), row_i(m);
  for (std::size_t p = 0; p < m; ++p) {
    for (std::size_t q = 0; q < m; ++q) block(p, q) = sys.at(others[p], others[q]);
    col_i[p] = sys.at(others[p], i);
    row_i[p] = sys.at(i, others[p]);
    rhs[p] = sys.rhs()[others[p]];
  }
  const auto y = lu_solve(block, col_i);
  const auto z = lu_solve(std::move(block), rhs);
  for (std::size_t p = 0; p < m; ++p) {
    out.a -= row_i[p] * y[p];
    out.b -= row_i[p] * z[p];
  }
  return out;
}

std::vector<std::size_t> UnwrappedTree::layer_sizes() const {
  std::vector<std::size_t> sizes;
  for (const auto& node : nodes) {
    if (node.depth >= sizes.size()) sizes.resize(node.depth + 1, 0);
    ++sizes[node.depth];
  }
  return sizes;
}

UnwrappedTree unwrap_tree(const UndirectedGraph& g, NodeId root, std::size_t t) {
  if (root >= g.n()) throw Error(ErrorKind::InvalidInput, "root out of range");
  UnwrappedTree tree;
  tree.nodes.push_back({0, root, std::nullopt, 0});
  std::size_t layer_begin = 0;
  for (std::size_t depth = 1; depth <= t; ++depth) {
    const std::size_t layer_end = tree.nodes.size();
    for (std::size_t leaf = layer_begin; leaf < layer_end; ++leaf) {
      const NodeId original = tree.nodes[leaf].original;
      const auto parent = tree.nodes[leaf].parent;
      const bool has_parent = parent.has_value();
      const NodeId parent_original = has_parent ? tree.nodes[*parent].original : 0;
      for (NodeId v : g.neighbors(original)) {
        if (has_parent && v == parent_original) continue;
        tree.nodes.push_back({tree.nodes.size(), v, leaf, depth});
      }
    }
    layer_begin = layer_end;
  }
  return tree;
}

SparseSystem unwrapped_system(const SparseSystem& sys, const UnwrappedTree& tree) {
  std::vector<Entry> entries;
  std::vector<double> rhs(tree.nodes.size());
  entries.reserve(3 * tree.nodes.size());
  for (const auto& node : tree.nodes) {
    entries.push_back({node.id, node.id, sys.diag(node.original)});
    rhs[node.id] = sys.rhs()[node.original];
    if (node.parent) {
      const auto& parent = tree.nodes[*node.parent];
      const double pc = sys.at(parent.original, node.original);
      const double cp = sys.at(node.original, parent.original);
      if (pc != 0.0) entries.push_back({parent.id, node.id, pc});
      if (cp != 0.0) entries.push_back({node.id, parent.id, cp});
    }
  }
  return SparseSystem(tree.nodes.size(), std::move(entries), std::move(rhs));
}

namespace {

// Gaussian elimination leaves first; tree ordering produces no fill.
double solve_tree_root(const SparseSystem& sys, const UnwrappedTree& tree) {
  std::vector<double> diag(tree.nodes.size()), rhs(tree.nodes.size());
  for (const auto& node : tree.nodes) {
    diag[node.id] = sys.diag(node.id);
    rhs[node.id] = sys.rhs()[node.id];
  }
  for (std::size_t c = tree.nodes.size(); c-- > 1;) {
    const std::size_t p = *tree.nodes[c].parent;
    const double pc = sys.at(p, c), cp = sys.at(c, p);
    if (diag[c] == 0.0) throw Error(ErrorKind::SingularMatrix, "zero pivot in tree elimination");
    diag[p] -= pc * cp / diag[c];
    rhs[p] -= pc * rhs[c] / diag[c];
  }
  return rhs[tree.root] / diag[tree.root];
}

}  // namespace

UnwrappedCheck unwrapped_equivalence_check(const SparseSystem& sys, NodeId i, std::size_t t,
                                           double rel_tol, const OracleLimits& limits) {
  const auto g = induced_graph(sys);
  // Layer sizes grow geometrically on loopy graphs; count before building.
  std::size_t count = 1;
  std::vector<std::pair<NodeId, std::optional<NodeId>>> frontier{{i, std::nullopt}};
  for (std::size_t d = 1; d <= t; ++d) {
    std::vector<std::pair<NodeId, std::optional<NodeId>>> next;
    for (const auto& [o, p] : frontier) {
      for (NodeId v : g.neighbors(o)) {
        if (p && v == *p) continue;
        next.emplace_back(v, o);
      }
      if (count + next.size() > limits.max_unwrapped_nodes) {
        throw Error(ErrorKind::TooLarge, "unwrapped tree exceeds the node guard");
      }
    }
    count += next.size();
    frontier = std::move(next);
  }

  const auto tree = unwrap_tree(g, i, t);
  const auto unwrapped = unwrapped_system(sys, tree);
  UnwrappedCheck check;
  if (tree.nodes.size() <= limits.max_dense_nodes) {
    check.root_solution = dense_solve(unwrapped)[tree.root];
  } else {
    check.root_solution = solve_tree_root(unwrapped, tree);
  }

  const BpProgram program(sys);
  RunOptions run;
  run.max_rounds = t;
  run.stop = {StopKind::FixedRounds, 0.0};
  const auto result = run_rounds(program, run);
  if (result.reason == StopReason::Fault) {
    throw Error(result.fault->cause, result.fault->message);
  }
  check.bp_estimate = result.trace.rounds.back().estimates[i];
  const double scale = std::max(std::fabs(check.root_solution), std::fabs(check.bp_estimate));
  check.matches = std::fabs(check.root_solution - check.bp_estimate) <= rel_tol * scale;
  return check;
}

}  // namespace dlsolve
