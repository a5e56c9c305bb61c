#include "dlsolve/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace dlsolve {

ResidualMatrix residual_matrix(const SparseMatrix& a) {
  std::vector<Entry> out;
  out.reserve(a.nnz());
  for (NodeId i = 0; i < a.n(); ++i) {
    const double aii = a.at(i, i);
    if (aii == 0.0) {
      throw Error(ErrorKind::ZeroDiagonal,
                  "a_ii is zero at row " + std::to_string(i + 1));
    }
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      if (cols[p] != i) out.push_back({i, cols[p], -vals[p] / aii});
    }
  }
  return ResidualMatrix(SparseMatrix(a.n(), std::move(out)));
}

ResidualMatrix residual_matrix(const SparseSystem& sys) { return residual_matrix(sys.matrix()); }

namespace {

// Iterative Tarjan; returns the component index of every node.
std::vector<std::size_t> strongly_connected(const SparseMatrix& m, std::size_t& count) {
  const std::size_t n = m.n();
  constexpr auto kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kNone), low(n, 0), comp(n, kNone);
  std::vector<bool> on_stack(n, false);
  std::vector<NodeId> stack;
  std::vector<std::pair<NodeId, std::size_t>> call;  // (node, next edge position)
  std::size_t next_index = 0;
  count = 0;

  for (NodeId root = 0; root < n; ++root) {
    if (index[root] != kNone) continue;
    call.emplace_back(root, 0);
    while (!call.empty()) {
      auto& [u, pos] = call.back();
      if (pos == 0 && index[u] == kNone) {
        index[u] = low[u] = next_index++;
        stack.push_back(u);
        on_stack[u] = true;
      }
      const auto cols = m.row_cols(u);
      const auto vals = m.row_values(u);
      bool descended = false;
      while (pos < cols.size()) {
        const NodeId v = cols[pos];
        const double w = vals[pos];
        ++pos;
        if (w == 0.0) continue;
        if (index[v] == kNone) {
          call.emplace_back(v, 0);
          descended = true;
          break;
        }
        if (on_stack[v]) low[u] = std::min(low[u], index[v]);
      }
      if (descended) continue;
      const NodeId done = u;
      if (low[done] == index[done]) {
        NodeId w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = count;
        } while (w != done);
        ++count;
      }
      call.pop_back();
      if (!call.empty()) {
        const NodeId parent = call.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
    }
  }
  return comp;
}

struct BlockResult {
  double value;
  double lower;
  double upper;
  bool converged;
  std::size_t iterations;
};

// A decision band [lo, hi]: iteration may stop as soon as the certified
// bracket lies entirely below lo or entirely above hi.
struct Band {
  double lo;
  double hi;
};

BlockResult block_radius(const SparseMatrix& m, std::span<const NodeId> nodes,
                         std::span<const std::size_t> local, double tol,
                         std::size_t max_iter, std::optional<Band> band) {
  const std::size_t k = nodes.size();
  if (k == 1) {
    const double d = m.at(nodes[0], nodes[0]);
    return {d, d, d, true, 0};
  }

  std::vector<double> v(k, 1.0), w(k, 0.0);
  BlockResult out{0.0, 0.0, std::numeric_limits<double>::infinity(), false, max_iter};
  for (std::size_t it = 1; it <= max_iter; ++it) {
    for (std::size_t a = 0; a < k; ++a) {
      const auto cols = m.row_cols(nodes[a]);
      const auto vals = m.row_values(nodes[a]);
      double s = 0.0;
      for (std::size_t p = 0; p < cols.size(); ++p) {
        const std::size_t b = local[cols[p]];
        if (b != static_cast<std::size_t>(-1)) s += vals[p] * v[b];
      }
      w[a] = s;
    }
    double lo = w[0] / v[0], hi = lo;
    for (std::size_t a = 1; a < k; ++a) {
      const double r = w[a] / v[a];
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    // Every bracket of a positive vector bounds rho; keep the tightest.
    out.lower = std::max(out.lower, lo);
    out.upper = std::min(out.upper, hi);
    out.value = std::accumulate(w.begin(), w.end(), 0.0) / std::accumulate(v.begin(), v.end(), 0.0);
    out.value = std::clamp(out.value, out.lower, out.upper);
    out.iterations = it;
    if (out.upper - out.lower <= tol * std::max(1.0, out.value)) {
      out.converged = true;
      return out;
    }
    if (band && (out.upper < band->lo || out.lower > band->hi)) return out;

    double top = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      v[a] += w[a];
      top = std::max(top, v[a]);
    }
    for (auto& x : v) x /= top;
  }
  return out;
}

SpectralEstimate radius(const SparseMatrix& m, double tol, std::size_t max_iter,
                        std::optional<Band> band) {
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidInput, "tol must be positive");
  for (NodeId i = 0; i < m.n(); ++i) {
    for (double x : m.row_values(i)) {
      if (x < 0.0) throw Error(ErrorKind::InvalidInput, "matrix has a negative entry");
    }
  }
  if (max_iter == 0) max_iter = 10 * m.n() + 1000;

  std::size_t count = 0;
  const auto comp = strongly_connected(m, count);
  std::vector<std::vector<NodeId>> blocks(count);
  for (NodeId i = 0; i < m.n(); ++i) blocks[comp[i]].push_back(i);

  SpectralEstimate est;
  std::vector<std::size_t> local(m.n(), static_cast<std::size_t>(-1));
  for (const auto& block : blocks) {
    for (std::size_t a = 0; a < block.size(); ++a) local[block[a]] = a;
    const auto r = block_radius(m, block, local, tol, max_iter, band);
    for (NodeId i : block) local[i] = static_cast<std::size_t>(-1);
    est.value = std::max(est.value, r.value);
    est.lower = std::max(est.lower, r.lower);
    est.upper = std::max(est.upper, r.upper);
    est.converged = est.converged && r.converged;
    est.iterations = std::max(est.iterations, r.iterations);
    // One block above the band settles the maximum.
    if (band && r.lower > band->hi) break;
  }
  return est;
}

}  // namespace

SpectralEstimate spectral_radius_nonneg(const SparseMatrix& m, double tol, std::size_t max_iter) {
  return radius(m, tol, max_iter, std::nullopt);
}

bool is_diagonally_dominant(const SparseMatrix& a) {
  for (NodeId i = 0; i < a.n(); ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    double diag = 0.0, off = 0.0;
    for (std::size_t p = 0; p < cols.size(); ++p) {
      if (cols[p] == i) {
        diag = std::fabs(vals[p]);
      } else {
        off += std::fabs(vals[p]);
      }
    }
    if (!(diag > off)) return false;
  }
  return true;
}

bool is_diagonally_dominant(const SparseSystem& sys) { return is_diagonally_dominant(sys.matrix()); }

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Yes: return "yes";
    case Verdict::No: return "no";
    case Verdict::Indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

bool is_scaling_certificate(const SparseMatrix& a, std::span<const double> d) {
  if (d.size() != a.n()) return false;
  for (double x : d) {
    if (!(x > 0.0) || !std::isfinite(x)) return false;
  }
  for (NodeId i = 0; i < a.n(); ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    double diag = 0.0, off = 0.0;
    for (std::size_t p = 0; p < cols.size(); ++p) {
      if (cols[p] == i) {
        diag = std::fabs(vals[p]) * d[i];
      } else {
        off += std::fabs(vals[p]) * d[cols[p]];
      }
    }
    if (!(diag > off)) return false;
  }
  return true;
}

namespace {

// Partial sums of sum_l |R|^l 1 until they certify, or give up.
std::optional<std::vector<double>> neumann_scaling(const SparseSystem& sys, const SparseMatrix& rabs,
                                                   std::size_t max_iter) {
  const std::size_t n = sys.n();
  std::vector<double> d(n, 1.0);
  for (std::size_t it = 0; it < max_iter; ++it) {
    if (is_scaling_certificate(sys.matrix(), d)) return d;
    auto next = rabs.multiply(d);
    double change = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] += 1.0;
      change = std::max(change, std::fabs(next[i] - d[i]));
      scale = std::max(scale, std::fabs(next[i]));
    }
    d = std::move(next);
    if (change <= 1e-15 * scale) break;
  }
  if (is_scaling_certificate(sys.matrix(), d)) return d;
  return std::nullopt;
}

// Stops as soon as the bracket clears the verdict band; only the verdict is needed.
SpectralEstimate verdict_radius(const SparseMatrix& rabs, const AnalyzeOptions& opts) {
  return radius(rabs, opts.rho_tol * 0.1, opts.max_iter,
                Band{1.0 - opts.rho_tol, 1.0 + opts.rho_tol});
}

}  // namespace

std::optional<std::vector<double>> find_gdd_scaling(const SparseSystem& sys,
                                                    const AnalyzeOptions& opts) {
  const auto rabs = residual_matrix(sys).absolute();
  const auto rho = verdict_radius(rabs, opts);
  if (!(rho.upper < 1.0 - opts.rho_tol)) return std::nullopt;
  const std::size_t base = opts.max_iter ? opts.max_iter : 10 * sys.n() + 1000;
  return neumann_scaling(sys, rabs, 100 * base);
}

DominanceReport analyze(const SparseSystem& sys, const AnalyzeOptions& opts) {
  DominanceReport rep;
  rep.rho_tol = opts.rho_tol;
  rep.diag_dominant = is_diagonally_dominant(sys);
  const auto rabs = residual_matrix(sys).absolute();
  const auto rho = spectral_radius_nonneg(rabs, opts.rho_tol * 0.1, opts.max_iter);
  rep.rho_abs = rho.value;
  rep.rho_lower = rho.lower;
  rep.rho_upper = rho.upper;
  rep.rho_converged = rho.converged;
  if (rho.upper < 1.0 - opts.rho_tol) {
    rep.walk_summable = Verdict::Yes;
  } else if (rho.lower > 1.0 + opts.rho_tol) {
    rep.walk_summable = Verdict::No;
  } else {
    rep.walk_summable = Verdict::Indeterminate;
  }
  if (rep.walk_summable == Verdict::Yes) {
    const std::size_t base = opts.max_iter ? opts.max_iter : 10 * sys.n() + 1000;
    rep.scaling = neumann_scaling(sys, rabs, 100 * base);
  }
  return rep;
}

// ---------------------------------------------------------------------------

SparseSystem preprocess_overdetermined(const RectMatrix& a, std::span<const double> b) {
  if (a.rows < a.cols) {
    throw Error(ErrorKind::InvalidInput, "least squares needs rows >= cols");
  }
  if (b.size() != a.rows) {
    throw Error(ErrorKind::DimensionMismatch, "rhs length differs from row count");
  }
  std::vector<std::vector<std::pair<NodeId, double>>> rows(a.rows);
  std::map<std::pair<NodeId, NodeId>, bool> seen;
  for (const auto& e : a.entries) {
    if (e.row >= a.rows || e.col >= a.cols) throw Error(ErrorKind::InvalidInput, "entry out of range");
    if (!std::isfinite(e.value)) throw Error(ErrorKind::InvalidInput, "non-finite entry");
    if (!seen.emplace(std::make_pair(e.row, e.col), true).second) {
      throw Error(ErrorKind::DuplicateEntry, "duplicate entry in rectangular matrix");
    }
    rows[e.row].emplace_back(e.col, e.value);
  }
  std::map<std::pair<NodeId, NodeId>, double> ata;
  std::vector<double> atb(a.cols, 0.0);
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (const auto& [j, vj] : rows[r]) {
      atb[j] += vj * b[r];
      for (const auto& [k, vk] : rows[r]) ata[{j, k}] += vj * vk;
    }
  }
  std::vector<Entry> entries;
  for (const auto& [jk, v] : ata) {
    if (jk.first != jk.second && v == 0.0) continue;
    entries.push_back({jk.first, jk.second, v});
  }
  return SparseSystem(a.cols, std::move(entries), std::move(atb));
}

SparseSystem preprocess_underdetermined(const RectMatrix& a, std::span<const double> b,
                                        double lambda) {
  if (!(lambda > 0.0)) {
    throw Error(ErrorKind::NonPositiveLambda, "regularization lambda must be positive");
  }
  if (a.rows != a.cols) {
    throw Error(ErrorKind::InvalidInput, "regularization expects a zero-padded square matrix");
  }
  const SparseMatrix m(a.rows, a.entries);
  std::vector<Entry> entries = m.entries();
  std::vector<bool> has_diag(a.rows, false);
  for (auto& e : entries) {
    if (e.row == e.col) {
      e.value += lambda;
      has_diag[e.row] = true;
    }
  }
  for (NodeId i = 0; i < a.rows; ++i) {
    if (!has_diag[i]) entries.push_back({i, i, lambda});
  }
  return SparseSystem(a.rows, std::move(entries), std::vector<double>(b.begin(), b.end()));
}

}  // namespace dlsolve
