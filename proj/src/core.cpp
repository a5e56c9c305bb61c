#include "dlsolve/core.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <set>

namespace dlsolve {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::ZeroDiagonal: return "ZeroDiagonal";
    case ErrorKind::DuplicateEntry: return "DuplicateEntry";
    case ErrorKind::NonPositiveLambda: return "NonPositiveLambda";
    case ErrorKind::InvalidWalk: return "InvalidWalk";
    case ErrorKind::NotAnEdge: return "NotAnEdge";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::SingularMessage: return "SingularMessage";
    case ErrorKind::DivergedEstimate: return "DivergedEstimate";
    case ErrorKind::ZeroRow: return "ZeroRow";
    case ErrorKind::NotWalkSummable: return "NotWalkSummable";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::MissingDiagonal: return "MissingDiagonal";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// SparseMatrix

SparseMatrix::SparseMatrix(std::size_t n, std::vector<Entry> entries) : n_(n) {
  for (const auto& e : entries) {
    if (e.row >= n || e.col >= n) {
      throw Error(ErrorKind::InvalidInput,
                  "entry (" + std::to_string(e.row + 1) + ", " + std::to_string(e.col + 1) +
                      ") outside " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
    }
    if (!std::isfinite(e.value)) {
      throw Error(ErrorKind::InvalidInput, "non-finite value at (" + std::to_string(e.row + 1) +
                                               ", " + std::to_string(e.col + 1) + ")");
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
    return x.row != y.row ? x.row < y.row : x.col < y.col;
  });
  for (std::size_t k = 1; k < entries.size(); ++k) {
    if (entries[k].row == entries[k - 1].row && entries[k].col == entries[k - 1].col) {
      throw Error(ErrorKind::DuplicateEntry,
                  "duplicate entry (" + std::to_string(entries[k].row + 1) + ", " +
                      std::to_string(entries[k].col + 1) + ")");
    }
  }
  row_ptr_.assign(n + 1, 0);
  cols_.reserve(entries.size());
  vals_.reserve(entries.size());
  for (const auto& e : entries) {
    ++row_ptr_[e.row + 1];
    cols_.push_back(e.col);
    vals_.push_back(e.value);
  }
  for (std::size_t i = 0; i < n; ++i) row_ptr_[i + 1] += row_ptr_[i];
}

double SparseMatrix::at(NodeId i, NodeId j) const {
  const auto cols = row_cols(i);
  const auto it = std::lower_bound(cols.begin(), cols.end(), j);
  if (it == cols.end() || *it != j) return 0.0;
  return vals_[row_ptr_[i] + static_cast<std::size_t>(it - cols.begin())];
}

std::vector<double> SparseMatrix::diagonal() const {
  std::vector<double> d(n_, 0.0);
  for (NodeId i = 0; i < n_; ++i) d[i] = at(i, i);
  return d;
}

std::vector<Entry> SparseMatrix::entries() const {
  std::vector<Entry> out;
  out.reserve(nnz());
  for (NodeId i = 0; i < n_; ++i) {
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      out.push_back({i, cols_[p], vals_[p]});
    }
  }
  return out;
}

std::vector<double> SparseMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(n_, 0.0);
  for (NodeId i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += vals_[p] * x[cols_[p]];
    y[i] = s;
  }
  return y;
}

SparseMatrix SparseMatrix::abs() const {
  SparseMatrix out = *this;
  for (auto& v : out.vals_) v = std::fabs(v);
  return out;
}

// ---------------------------------------------------------------------------
// SparseSystem

SparseSystem::SparseSystem(SparseMatrix a, std::vector<double> rhs)
    : a_(std::move(a)), rhs_(std::move(rhs)) {
  if (rhs_.size() != a_.n()) {
    throw Error(ErrorKind::DimensionMismatch, "rhs has " + std::to_string(rhs_.size()) +
                                                  " entries, matrix has " +
                                                  std::to_string(a_.n()) + " rows");
  }
  for (std::size_t i = 0; i < rhs_.size(); ++i) {
    if (!std::isfinite(rhs_[i])) {
      throw Error(ErrorKind::InvalidInput, "non-finite rhs entry " + std::to_string(i + 1));
    }
  }
  diag_ = a_.diagonal();
  for (std::size_t i = 0; i < diag_.size(); ++i) {
    if (diag_[i] == 0.0) {
      throw Error(ErrorKind::ZeroDiagonal,
                  "diagonal entry (" + std::to_string(i + 1) + ", " + std::to_string(i + 1) +
                      ") is zero or missing");
    }
  }
}

// ---------------------------------------------------------------------------
// UndirectedGraph

UndirectedGraph::UndirectedGraph(std::size_t n,
                                 std::span<const std::pair<NodeId, NodeId>> edges) {
  std::vector<std::vector<NodeId>> lists(n);
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n) throw Error(ErrorKind::InvalidInput, "edge endpoint out of range");
    if (u == v) continue;
    lists[u].push_back(v);
    lists[v].push_back(u);
  }
  offsets_.assign(n + 1, 0);
  for (NodeId i = 0; i < n; ++i) {
    auto& l = lists[i];
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
    offsets_[i + 1] = offsets_[i] + l.size();
  }
  adj_.reserve(offsets_[n]);
  for (const auto& l : lists) adj_.insert(adj_.end(), l.begin(), l.end());

  reverse_.resize(adj_.size());
  for (NodeId v = 0; v < n; ++v) {
    for (std::size_t p = offsets_[v]; p < offsets_[v + 1]; ++p) {
      // p is the slot of adj_[p] -> v; its reverse is v -> adj_[p].
      reverse_[p] = slot(v, adj_[p]);
    }
  }
}

bool UndirectedGraph::has_edge(NodeId u, NodeId v) const {
  if (u >= n() || v >= n()) return false;
  const auto nb = neighbors(v);
  return std::binary_search(nb.begin(), nb.end(), u);
}

std::size_t UndirectedGraph::slot(NodeId from, NodeId to) const {
  if (from >= n() || to >= n()) throw Error(ErrorKind::NotAnEdge, "node out of range");
  const auto nb = neighbors(to);
  const auto it = std::lower_bound(nb.begin(), nb.end(), from);
  if (it == nb.end() || *it != from) {
    throw Error(ErrorKind::NotAnEdge, "(" + std::to_string(from + 1) + ", " +
                                          std::to_string(to + 1) + ") is not an edge");
  }
  return offsets_[to] + static_cast<std::size_t>(it - nb.begin());
}

std::vector<std::pair<NodeId, NodeId>> UndirectedGraph::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(edge_count());
  for (NodeId u = 0; u < n(); ++u) {
    for (NodeId v : neighbors(u)) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

UndirectedGraph induced_graph(const SparseMatrix& a) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(a.nnz());
  for (NodeId i = 0; i < a.n(); ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      if (cols[p] != i && vals[p] != 0.0) edges.emplace_back(i, cols[p]);
    }
  }
  return UndirectedGraph(a.n(), edges);
}

UndirectedGraph induced_graph(const SparseSystem& sys) { return induced_graph(sys.matrix()); }

std::vector<std::size_t> bfs_distances(const UndirectedGraph& g, NodeId source) {
  constexpr auto kUnseen = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(g.n(), kUnseen);
  std::deque<NodeId> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    for (NodeId v : g.neighbors(u)) {
      if (dist[v] == kUnseen) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

std::size_t diameter(const UndirectedGraph& g) {
  std::size_t best = 0;
  for (NodeId s = 0; s < g.n(); ++s) {
    for (std::size_t d : bfs_distances(g, s)) {
      if (d != std::numeric_limits<std::size_t>::max()) best = std::max(best, d);
    }
  }
  return best;
}

bool is_acyclic(const UndirectedGraph& g) {
  // A forest has exactly n - c edges, c = number of components.
  return g.edge_count() + connected_components(g).size() == g.n();
}

std::vector<std::vector<NodeId>> connected_components(const UndirectedGraph& g) {
  std::vector<std::vector<NodeId>> parts;
  std::vector<bool> seen(g.n(), false);
  for (NodeId s = 0; s < g.n(); ++s) {
    if (seen[s]) continue;
    std::vector<NodeId> part{s};
    seen[s] = true;
    for (std::size_t head = 0; head < part.size(); ++head) {
      for (NodeId v : g.neighbors(part[head])) {
        if (!seen[v]) {
          seen[v] = true;
          part.push_back(v);
        }
      }
    }
    std::sort(part.begin(), part.end());
    parts.push_back(std::move(part));
  }
  return parts;
}

// ---------------------------------------------------------------------------
// Randomness

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

double edge_uniform(std::uint64_t seed, NodeId i, NodeId j) {
  std::uint64_t h = splitmix64(seed ^ 0x5EEDC0EFF1C1E5ULL);
  h = splitmix64(h ^ static_cast<std::uint64_t>(i));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(j) << 1));
  return open_unit(h);
}

namespace {

std::size_t below(std::mt19937_64& rng, std::size_t m) {
  return static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(m));
}

// Random recursive tree over a random node order.
std::vector<std::pair<NodeId, NodeId>> random_tree(std::size_t n, std::mt19937_64& rng) {
  std::vector<NodeId> order(n);
  for (NodeId i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[below(rng, i)]);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t k = 1; k < n; ++k) {
    const NodeId parent = order[below(rng, k)];
    edges.emplace_back(std::min(parent, order[k]), std::max(parent, order[k]));
  }
  return edges;
}

void add_random_edges(std::size_t n, std::size_t extra, std::mt19937_64& rng,
                      std::vector<std::pair<NodeId, NodeId>>& edges) {
  std::set<std::pair<NodeId, NodeId>> present(edges.begin(), edges.end());
  const std::size_t max_edges = n * (n - 1) / 2;
  extra = std::min(extra, max_edges - std::min(max_edges, present.size()));
  std::size_t added = 0;
  while (added < extra) {
    const NodeId u = below(rng, n);
    const NodeId v = below(rng, n);
    if (u == v) continue;
    const auto e = std::make_pair(std::min(u, v), std::max(u, v));
    if (present.insert(e).second) {
      edges.push_back(e);
      ++added;
    }
  }
}

void validate(const GeneratorSpec& spec) {
  if (spec.n == 0) throw Error(ErrorKind::InvalidInput, "generator needs n >= 1");
  if (!(spec.coeff_lo < spec.coeff_hi)) {
    throw Error(ErrorKind::InvalidInput, "coefficient range is empty");
  }
  if (spec.coeff_lo == 0.0 || spec.coeff_hi == 0.0) {
    throw Error(ErrorKind::InvalidInput, "coefficient range must not have a zero endpoint");
  }
  if (spec.kind == GeneratorKind::Example1Tree && spec.n != 7) {
    throw Error(ErrorKind::InvalidInput, "example1-tree has exactly 7 nodes");
  }
  if (spec.diag_rule == DiagRule::Explicit && spec.diag_value == 0.0) {
    throw Error(ErrorKind::InvalidInput, "explicit diagonal must be nonzero");
  }
  if (!(spec.avg_degree >= 0.0)) throw Error(ErrorKind::InvalidInput, "avg_degree must be >= 0");
}

}  // namespace

const char* to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::Example1Tree: return "example1-tree";
    case GeneratorKind::LoopySmall: return "loopy-small";
    case GeneratorKind::RandomSparse: return "random-sparse";
    case GeneratorKind::RandomTree: return "random-tree";
    case GeneratorKind::Path: return "path";
    case GeneratorKind::Star: return "star";
  }
  return "unknown";
}

GeneratorKind parse_generator_kind(const std::string& s) {
  for (auto k : {GeneratorKind::Example1Tree, GeneratorKind::LoopySmall,
                 GeneratorKind::RandomSparse, GeneratorKind::RandomTree, GeneratorKind::Path,
                 GeneratorKind::Star}) {
    if (s == to_string(k)) return k;
  }
  throw Error(ErrorKind::InvalidInput, "unknown generator kind '" + s + "'");
}

std::vector<std::pair<NodeId, NodeId>> example1_edges() {
  return {{0, 1}, {0, 2}, {1, 3}, {1, 4}, {2, 5}, {2, 6}};
}

std::vector<std::pair<NodeId, NodeId>> theta_edges() {
  return {{0, 1}, {0, 2}, {0, 3}, {1, 4}, {2, 4}, {3, 4}};
}

std::vector<std::pair<NodeId, NodeId>> generate_topology(const GeneratorSpec& spec) {
  validate(spec);
  const std::size_t n = spec.n;
  std::mt19937_64 rng(splitmix64(spec.seed));
  std::vector<std::pair<NodeId, NodeId>> edges;
  switch (spec.kind) {
    case GeneratorKind::Example1Tree:
      return example1_edges();
    case GeneratorKind::Path:
      for (NodeId i = 1; i < n; ++i) edges.emplace_back(i - 1, i);
      return edges;
    case GeneratorKind::Star:
      for (NodeId i = 1; i < n; ++i) edges.emplace_back(0, i);
      return edges;
    case GeneratorKind::RandomTree:
      return random_tree(n, rng);
    case GeneratorKind::LoopySmall: {
      // Connected, with at least one cycle once n >= 3.
      edges = random_tree(n, rng);
      if (n >= 3) add_random_edges(n, std::max<std::size_t>(1, n / 4), rng, edges);
      return edges;
    }
    case GeneratorKind::RandomSparse: {
      if (spec.avg_degree == 0.0 || n == 1) return edges;
      edges = random_tree(n, rng);
      const auto target =
          static_cast<std::size_t>(std::llround(spec.avg_degree * static_cast<double>(n) / 2.0));
      if (target > edges.size()) add_random_edges(n, target - edges.size(), rng, edges);
      return edges;
    }
  }
  return edges;
}

SparseSystem system_on_edges(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges,
                             const GeneratorSpec& spec) {
  const UndirectedGraph g(n, edges);
  std::vector<Entry> entries;
  entries.reserve(n + g.slot_count());
  for (NodeId i = 0; i < n; ++i) {
    double d = 1.0;
    switch (spec.diag_rule) {
      // An isolated node would get a zero diagonal; it keeps 1 instead.
      case DiagRule::NeighborCount: d = static_cast<double>(std::max<std::size_t>(1, g.degree(i))); break;
      case DiagRule::Unit: d = 1.0; break;
      case DiagRule::Explicit: d = spec.diag_value; break;
    }
    entries.push_back({i, i, d});
    for (NodeId j : g.neighbors(i)) {
      const double u = edge_uniform(spec.seed, i, j);
      entries.push_back({i, j, spec.coeff_lo + (spec.coeff_hi - spec.coeff_lo) * u});
    }
  }
  std::vector<double> rhs(n);
  for (NodeId i = 0; i < n; ++i) rhs[i] = static_cast<double>(i + 1);
  return SparseSystem(n, std::move(entries), std::move(rhs));
}

SparseSystem generate_instance(const GeneratorSpec& spec) {
  const auto edges = generate_topology(spec);
  return system_on_edges(spec.n, edges, spec);
}

}  // namespace dlsolve
