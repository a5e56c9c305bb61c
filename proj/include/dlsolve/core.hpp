#pragma once

// Sparse matrix / linear system substrate, the induced undirected graph and
// the seeded instance generators.
//
// Node ids are 0-based everywhere inside the library. The Matrix Market
// reader/writer and the CLI convert to and from the 1-based external form.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dlsolve/error.hpp"

namespace dlsolve {

using NodeId = std::size_t;

struct Entry {
  NodeId row = 0;
  NodeId col = 0;
  double value = 0.0;
};

/// Square sparse matrix in compressed-row form. Columns are sorted within a
/// row. Entries are stored as given, so explicit zeros survive construction.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Throws InvalidInput for out-of-range indices or non-finite values and
  /// DuplicateEntry for a repeated (row, col) pair.
  SparseMatrix(std::size_t n, std::vector<Entry> entries);

  std::size_t n() const noexcept { return n_; }
  std::size_t nnz() const noexcept { return cols_.size(); }

  std::span<const NodeId> row_cols(NodeId i) const {
    return {cols_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const double> row_values(NodeId i) const {
    return {vals_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }

  /// Coefficient (i, j); zero when the entry is not stored.
  double at(NodeId i, NodeId j) const;

  std::vector<double> diagonal() const;
  std::vector<Entry> entries() const;
  std::vector<double> multiply(std::span<const double> x) const;

  /// Elementwise absolute value, same pattern.
  SparseMatrix abs() const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<NodeId> cols_;
  std::vector<double> vals_;
};

/// Problem instance Ax = b. Every diagonal entry is stored and nonzero.
class SparseSystem {
 public:
  SparseSystem() = default;

  /// Throws ZeroDiagonal when some a_ii is absent or zero, DimensionMismatch
  /// when rhs has the wrong length, plus everything SparseMatrix throws.
  SparseSystem(SparseMatrix a, std::vector<double> rhs);
  SparseSystem(std::size_t n, std::vector<Entry> entries, std::vector<double> rhs)
      : SparseSystem(SparseMatrix(n, std::move(entries)), std::move(rhs)) {}

  std::size_t n() const noexcept { return a_.n(); }
  const SparseMatrix& matrix() const noexcept { return a_; }
  std::span<const double> rhs() const noexcept { return rhs_; }
  double diag(NodeId i) const { return diag_[i]; }
  double at(NodeId i, NodeId j) const { return a_.at(i, j); }

  friend bool operator==(const SparseSystem&, const SparseSystem&) = default;

 private:
  SparseMatrix a_;
  std::vector<double> rhs_;
  std::vector<double> diag_;
};

/// Undirected simple graph with sorted adjacency lists.
///
/// Directed edges are addressed by "slots" laid out by receiver: the message
/// u -> v lives at offset(v) + position of u in neighbors(v). A node's inbox
/// is therefore one contiguous range, and reverse_slot() maps the slot of
/// u -> v to the slot of v -> u.
class UndirectedGraph {
 public:
  UndirectedGraph() = default;

  /// Builds from an edge list. Self loops are dropped and repeated edges merged.
  UndirectedGraph(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges);

  std::size_t n() const noexcept { return offsets_.size() - 1; }
  std::size_t edge_count() const noexcept { return adj_.size() / 2; }
  std::size_t slot_count() const noexcept { return adj_.size(); }

  std::span<const NodeId> neighbors(NodeId i) const {
    return {adj_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::size_t degree(NodeId i) const { return offsets_[i + 1] - offsets_[i]; }
  std::size_t offset(NodeId i) const { return offsets_[i]; }

  bool has_edge(NodeId u, NodeId v) const;

  /// Slot of the directed edge from -> to. Throws NotAnEdge.
  std::size_t slot(NodeId from, NodeId to) const;
  std::size_t reverse_slot(std::size_t s) const { return reverse_[s]; }

  /// Each undirected edge once, as (min, max), in ascending order.
  std::vector<std::pair<NodeId, NodeId>> edges() const;

  friend bool operator==(const UndirectedGraph&, const UndirectedGraph&) = default;

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> adj_;
  std::vector<std::size_t> reverse_;
};

/// Edge (i, j) whenever a_ij != 0 or a_ji != 0, i != j.
UndirectedGraph induced_graph(const SparseMatrix& a);
UndirectedGraph induced_graph(const SparseSystem& sys);

/// BFS distances from source; unreachable nodes get SIZE_MAX.
std::vector<std::size_t> bfs_distances(const UndirectedGraph& g, NodeId source);

/// Largest BFS distance within any connected component. Zero for a singleton.
std::size_t diameter(const UndirectedGraph& g);

bool is_acyclic(const UndirectedGraph& g);

/// Components in ascending order of their smallest node; nodes sorted inside.
std::vector<std::vector<NodeId>> connected_components(const UndirectedGraph& g);

// ---------------------------------------------------------------------------
// Instance generation

enum class GeneratorKind { Example1Tree, LoopySmall, RandomSparse, RandomTree, Path, Star };
enum class DiagRule { NeighborCount, Unit, Explicit };

const char* to_string(GeneratorKind kind);
GeneratorKind parse_generator_kind(const std::string& s);

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::Example1Tree;
  std::size_t n = 7;
  std::uint64_t seed = 0;
  /// Off-diagonal a_ij are drawn uniformly from the open interval (coeff_lo, coeff_hi).
  double coeff_lo = -1.0;
  double coeff_hi = -0.85;
  DiagRule diag_rule = DiagRule::NeighborCount;
  /// Diagonal value for DiagRule::Explicit.
  double diag_value = 1.0;
  /// Target mean degree for RandomSparse; zero gives a diagonal system.
  double avg_degree = 4.0;
};

/// The 7-node tree used by the acyclic example: 1-2, 1-3, 2-4, 2-5, 3-6, 3-7
/// (0-based here).
std::vector<std::pair<NodeId, NodeId>> example1_edges();

/// Five nodes, three disjoint two-hop paths between node 1 and node 5:
/// 1-2, 1-3, 1-4, 2-5, 3-5, 4-5 (0-based here). Smallest graph whose
/// computation trees show loops being unrolled from both ends.
std::vector<std::pair<NodeId, NodeId>> theta_edges();

/// Topology of the requested kind. Deterministic in (kind, n, seed).
std::vector<std::pair<NodeId, NodeId>> generate_topology(const GeneratorSpec& spec);

/// Fills coefficients on a fixed topology: every stored off-diagonal a_ij
/// (both directions of each edge, drawn independently), the diagonal per
/// spec.diag_rule and b_i = i (1-based). Only the coefficient fields and the
/// seed of spec are used.
SparseSystem system_on_edges(std::size_t n,
                             std::span<const std::pair<NodeId, NodeId>> edges,
                             const GeneratorSpec& spec);

/// generate_topology followed by system_on_edges. Throws InvalidInput on
/// n = 0, an empty coefficient range, a zero endpoint, or n != 7 for
/// Example1Tree.
SparseSystem generate_instance(const GeneratorSpec& spec);

// ---------------------------------------------------------------------------
// Reproducible randomness
//
// Topology draws come from std::mt19937_64 seeded with splitmix64(seed);
// bounded integers use modulo reduction on its raw 64-bit output. Each
// directed edge (i, j) has its own coefficient stream: the value is a
// function of (seed, i, j) only, via edge_uniform(). Both paths avoid the
// standard distributions, whose output is not portable across libraries.

std::uint64_t splitmix64(std::uint64_t x);

/// Uniform double in the open interval (0, 1) from the 52 high bits of bits;
/// the half-ulp offset keeps both ends out exactly.
double open_unit(std::uint64_t bits);

/// Per-directed-edge uniform draw in (0, 1).
double edge_uniform(std::uint64_t seed, NodeId i, NodeId j);

}  // namespace dlsolve
