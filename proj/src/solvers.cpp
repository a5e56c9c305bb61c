#include "dlsolve/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "dlsolve/analysis.hpp"

namespace dlsolve {

// ---------------------------------------------------------------------------
// Dense

DenseMatrix to_dense(const SparseMatrix& a) {
  DenseMatrix d(a.n());
  for (const auto& e : a.entries()) d(e.row, e.col) = e.value;
  return d;
}

std::vector<double> lu_solve(DenseMatrix a, std::span<const double> b) {
  const std::size_t n = a.n();
  if (b.size() != n) throw Error(ErrorKind::DimensionMismatch, "rhs length differs from matrix size");
  std::vector<double> x(b.begin(), b.end());
  std::vector<double> scale(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) scale[i] = std::max(scale[i], std::fabs(a(i, j)));
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(a(r, c)) > std::fabs(a(piv, c))) piv = r;
    }
    if (!(std::fabs(a(piv, c)) >= 1e-14 * scale[piv]) || a(piv, c) == 0.0) {
      throw Error(ErrorKind::SingularMatrix,
                  "pivot below threshold in column " + std::to_string(c + 1));
    }
    if (piv != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(c, j), a(piv, j));
      std::swap(x[c], x[piv]);
      std::swap(scale[c], scale[piv]);
    }
    const double p = a(c, c);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a(r, c) / p;
      if (f == 0.0) continue;
      a(r, c) = 0.0;
      for (std::size_t j = c + 1; j < n; ++j) a(r, j) -= f * a(c, j);
      x[r] -= f * x[c];
    }
  }
  for (std::size_t c = n; c-- > 0;) {
    double s = x[c];
    for (std::size_t j = c + 1; j < n; ++j) s -= a(c, j) * x[j];
    x[c] = s / a(c, c);
  }
  return x;
}

std::vector<double> dense_solve(const SparseSystem& sys) {
  return lu_solve(to_dense(sys.matrix()), sys.rhs());
}

// ---------------------------------------------------------------------------
// Message passing

namespace {

void neighbor_coefficients(const SparseSystem& sys, const UndirectedGraph& g,
                           std::vector<double>& row, std::vector<double>& col) {
  row.resize(g.slot_count());
  col.resize(g.slot_count());
  for (NodeId i = 0; i < g.n(); ++i) {
    const auto nb = g.neighbors(i);
    for (std::size_t p = 0; p < nb.size(); ++p) {
      row[g.offset(i) + p] = sys.at(i, nb[p]);
      col[g.offset(i) + p] = sys.at(nb[p], i);
    }
  }
}

void check_estimate(double x, double limit, NodeId i) {
  if (!std::isfinite(x) || std::fabs(x) > limit) {
    throw Error(ErrorKind::DivergedEstimate,
                "estimate of node " + std::to_string(i + 1) + " diverged");
  }
}

}  // namespace

BpProgram::BpProgram(const SparseSystem& sys, BpSettings settings)
    : g_(induced_graph(sys)),
      diag_(sys.matrix().diagonal()),
      rhs_(sys.rhs().begin(), sys.rhs().end()),
      settings_(settings) {
  neighbor_coefficients(sys, g_, a_row_, a_col_);
  if (settings_.singular_eps >= 0.0) {
    eps_ = settings_.singular_eps;
  } else {
    double biggest = 0.0;
    for (const auto& e : sys.matrix().entries()) biggest = std::max(biggest, std::fabs(e.value));
    eps_ = 1e-12 * biggest;
  }
}

void BpProgram::init(NodeId i, State& s, Outbox<Message>& out, WorkMeter& meter) const {
  const std::size_t deg = g_.degree(i);
  s.a_tilde = diag_[i];
  s.b_tilde = rhs_[i];
  s.x_hat = rhs_[i] / diag_[i];
  s.a_out.assign(deg, diag_[i]);
  s.b_out.assign(deg, rhs_[i]);
  s.nonpositive_messages = 0;
  meter.add(1);
  for (std::size_t p = 0; p < deg; ++p) out.send(p, {diag_[i], rhs_[i]});
}

void BpProgram::step(NodeId i, State& s, std::span<const Message> inbox, Outbox<Message>& out,
                     WorkMeter& meter) const {
  const std::size_t deg = inbox.size();
  const std::size_t base = g_.offset(i);
  double sum_a = 0.0, sum_b = 0.0;
  for (std::size_t p = 0; p < deg; ++p) {
    const Message& m = inbox[p];
    if (!(std::fabs(m.a) > eps_)) {
      throw Error(ErrorKind::SingularMessage,
                  "message a_{" + std::to_string(g_.neighbors(i)[p] + 1) + "->" +
                      std::to_string(i + 1) + "} is singular");
    }
    // Per-neighbor terms are kept in the outgoing buffers and completed below.
    s.a_out[p] = a_col_[base + p] * a_row_[base + p] / m.a;
    s.b_out[p] = a_row_[base + p] * m.b / m.a;
    sum_a += s.a_out[p];
    sum_b += s.b_out[p];
  }
  meter.add(6 * deg);
  s.a_tilde = diag_[i] - sum_a;
  s.b_tilde = rhs_[i] - sum_b;
  if (!(std::fabs(s.a_tilde) > eps_)) {
    throw Error(ErrorKind::SingularMessage,
                "aggregate a~ at node " + std::to_string(i + 1) + " vanished");
  }
  s.x_hat = s.b_tilde / s.a_tilde;
  meter.add(3);
  check_estimate(s.x_hat, settings_.divergence_limit, i);

  const double sign = settings_.flip_add_back_sign ? -1.0 : 1.0;
  const bool positive_diag = diag_[i] > 0.0;
  for (std::size_t p = 0; p < deg; ++p) {
    s.a_out[p] = s.a_tilde + sign * s.a_out[p];
    s.b_out[p] = s.b_tilde + sign * s.b_out[p];
    if (positive_diag ? !(s.a_out[p] > 0.0) : !(s.a_out[p] < 0.0)) ++s.nonpositive_messages;
    out.send(p, {s.a_out[p], s.b_out[p]});
  }
  meter.add(2 * deg);
}

std::size_t BpProgram::storage(NodeId i, const State&) const {
  // a_ii, b_i, a~, b~, x^ plus per neighbor a_iv, a_vi and the two outgoing values.
  return 5 + 4 * g_.degree(i);
}

SolveResult bp_solve(const SparseSystem& sys, const BpSolveOptions& opts) {
  SolveResult res;
  const auto report = analyze(sys, {.rho_tol = opts.rho_tol});
  if (report.walk_summable != Verdict::Yes) {
    const std::string msg = std::string("instance is not certified walk-summable (verdict ") +
                            to_string(report.walk_summable) +
                            ", rho(|R|) = " + std::to_string(report.rho_abs) + ")";
    if (!opts.force) throw Error(ErrorKind::NotWalkSummable, msg);
    res.warnings.push_back("NotWalkSummable: " + msg);
  }

  const BpProgram program(sys, opts.settings);
  RunOptions run;
  run.reference = opts.reference;
  run.threads = opts.threads;
  const bool tree = is_acyclic(program.graph());
  const std::size_t d = tree ? diameter(program.graph()) : 0;
  if (tree) {
    run.stop = {StopKind::FixedRounds, 0.0};
    run.max_rounds = std::min(d, opts.max_rounds);
  } else {
    run.stop = {StopKind::EstimateDelta, opts.tol};
    run.max_rounds = opts.max_rounds;
  }
  RoundObserver<BpProgram> count = [&res](std::size_t, std::span<const BpMessage>,
                                          std::span<const BpNodeState> states) {
    res.nonpositive_messages = 0;
    for (const auto& s : states) res.nonpositive_messages += s.nonpositive_messages;
  };
  res.run = run_rounds(program, run, count);
  if (tree && d > opts.max_rounds && res.run.reason == StopReason::StopRuleMet) {
    res.run.reason = StopReason::RoundLimit;
  }
  res.run.trace.label = "bp";
  if (!res.run.trace.rounds.empty()) res.solution = res.run.trace.rounds.back().estimates;
  return res;
}

// ---------------------------------------------------------------------------
// Jacobi

JacobiProgram::JacobiProgram(const SparseSystem& sys, double divergence_limit)
    : g_(induced_graph(sys)),
      diag_(sys.matrix().diagonal()),
      rhs_(sys.rhs().begin(), sys.rhs().end()),
      limit_(divergence_limit) {
  std::vector<double> unused;
  neighbor_coefficients(sys, g_, a_row_, unused);
}

void JacobiProgram::init(NodeId i, State& s, Outbox<Message>& out, WorkMeter& meter) const {
  s.x = rhs_[i] / diag_[i];
  meter.add(1);
  for (std::size_t p = 0; p < g_.degree(i); ++p) out.send(p, s.x);
}

void JacobiProgram::step(NodeId i, State& s, std::span<const Message> inbox, Outbox<Message>& out,
                         WorkMeter& meter) const {
  const std::size_t base = g_.offset(i);
  double acc = rhs_[i];
  for (std::size_t p = 0; p < inbox.size(); ++p) acc -= a_row_[base + p] * inbox[p];
  s.x = acc / diag_[i];
  meter.add(2 * inbox.size() + 1);
  check_estimate(s.x, limit_, i);
  for (std::size_t p = 0; p < inbox.size(); ++p) out.send(p, s.x);
}

std::size_t JacobiProgram::storage(NodeId i, const State&) const {
  // a_ii, b_i, x plus a_iv per neighbor.
  return 3 + g_.degree(i);
}

// ---------------------------------------------------------------------------
// Projection consensus

ConsensusProgram::ConsensusProgram(const SparseSystem& sys)
    : g_(induced_graph(sys)),
      a_(sys.matrix()),
      rhs_(sys.rhs().begin(), sys.rhs().end()),
      row_norm2_(sys.n(), 0.0) {
  for (NodeId i = 0; i < sys.n(); ++i) {
    for (double v : a_.row_values(i)) row_norm2_[i] += v * v;
    if (row_norm2_[i] == 0.0) {
      throw Error(ErrorKind::ZeroRow, "row " + std::to_string(i + 1) + " is zero");
    }
  }
}

void ConsensusProgram::init(NodeId i, State& s, Outbox<Message>& out, WorkMeter& meter) const {
  s.x.assign(g_.n(), 0.0);
  s.x[i] = rhs_[i] / a_.at(i, i);
  s.x_hat = s.x[i];
  meter.add(1);
  for (std::size_t p = 0; p < g_.degree(i); ++p) out.send(p, s.x);
}

void ConsensusProgram::step(NodeId i, State& s, std::span<const Message> inbox,
                            Outbox<Message>& out, WorkMeter& meter) const {
  const std::size_t deg = inbox.size();
  if (deg == 0) return;
  const std::size_t n = s.x.size();
  const double degree = static_cast<double>(deg);

  std::vector<double> v(n);
  for (std::size_t c = 0; c < n; ++c) v[c] = degree * s.x[c];
  for (const auto& xj : inbox) {
    for (std::size_t c = 0; c < n; ++c) v[c] -= xj[c];
  }
  meter.add(n * (deg + 1));

  const auto cols = a_.row_cols(i);
  const auto vals = a_.row_values(i);
  double dot = 0.0;
  for (std::size_t p = 0; p < cols.size(); ++p) dot += vals[p] * v[cols[p]];
  const double f = dot / row_norm2_[i];
  for (std::size_t p = 0; p < cols.size(); ++p) v[cols[p]] -= f * vals[p];
  meter.add(4 * cols.size() + 1);

  for (std::size_t c = 0; c < n; ++c) s.x[c] -= v[c] / degree;
  meter.add(2 * n);
  s.x_hat = s.x[i];
  check_estimate(s.x_hat, 1e150, i);
  for (std::size_t p = 0; p < deg; ++p) out.send(p, s.x);
}

std::size_t ConsensusProgram::storage(NodeId i, const State& s) const {
  // Candidate vector, scratch vector, the row a_i with its indices.
  return 2 * s.x.size() + 2 * a_.row_cols(i).size() + 2;
}

double ConsensusProgram::row_residual(NodeId i, std::span<const double> x) const {
  const auto cols = a_.row_cols(i);
  const auto vals = a_.row_values(i);
  double dot = 0.0;
  for (std::size_t p = 0; p < cols.size(); ++p) dot += vals[p] * x[cols[p]];
  return dot - rhs_[i];
}

// ---------------------------------------------------------------------------
// Gauss-Seidel

std::vector<double> gauss_seidel_sweep(const SparseSystem& sys, std::vector<double> x) {
  const auto& a = sys.matrix();
  if (x.size() != sys.n()) throw Error(ErrorKind::DimensionMismatch, "iterate has wrong length");
  for (NodeId i = 0; i < sys.n(); ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    double acc = sys.rhs()[i];
    for (std::size_t p = 0; p < cols.size(); ++p) {
      if (cols[p] != i) acc -= vals[p] * x[cols[p]];
    }
    x[i] = acc / sys.diag(i);
    check_estimate(x[i], 1e150, i);
  }
  return x;
}

RunResult gauss_seidel_solve(const SparseSystem& sys, const RunOptions& opts) {
  RunResult res;
  res.trace.label = "sequential-reference";
  const std::size_t n = sys.n();
  std::vector<double> x(n);
  for (NodeId i = 0; i < n; ++i) x[i] = sys.rhs()[i] / sys.diag(i);

  std::vector<double> ops(n);
  for (NodeId i = 0; i < n; ++i) ops[i] = 2.0 * static_cast<double>(sys.matrix().row_cols(i).size());

  std::vector<double> previous;
  for (std::size_t k = 0;; ++k) {
    if (k > 0) {
      try {
        x = gauss_seidel_sweep(sys, std::move(x));
      } catch (const Error& e) {
        res.reason = StopReason::Fault;
        res.fault = SolverFault{0, k, e.kind(), e.what()};
        return res;
      }
    }
    TraceRow row;
    row.k = k;
    row.estimates = x;
    row.accounting.messages_sent = 0;
    row.accounting.per_node_ops.assign(n, 0);
    row.accounting.per_node_storage.assign(n, 0);
    for (NodeId i = 0; i < n; ++i) {
      row.accounting.per_node_ops[i] = k == 0 ? 1 : static_cast<std::size_t>(ops[i]);
      row.accounting.per_node_storage[i] = n;
    }
    if (opts.reference) row.log10_mse = std::log10(mean_squared_error(x, *opts.reference));
    bool stop = false;
    switch (opts.stop.kind) {
      case StopKind::FixedRounds: stop = k >= opts.max_rounds; break;
      case StopKind::EstimateDelta: stop = k > 0 && delta_stop(previous, x, opts.stop.tol); break;
      case StopKind::ErrorBelow:
        if (!opts.reference) throw Error(ErrorKind::InvalidInput, "error stop rule needs a reference");
        stop = mean_squared_error(x, *opts.reference) <= opts.stop.tol;
        break;
    }
    if (k > 0) row.max_delta = max_abs_delta(previous, x);
    previous = x;
    res.trace.rounds.push_back(std::move(row));
    if (stop) {
      res.reason = StopReason::StopRuleMet;
      return res;
    }
    if (k >= opts.max_rounds) {
      res.reason = StopReason::RoundLimit;
      return res;
    }
  }
}

const char* to_string(Method m) {
  switch (m) {
    case Method::Bp: return "bp";
    case Method::Jacobi: return "jacobi";
    case Method::GaussSeidel: return "gauss-seidel";
    case Method::Consensus: return "consensus";
  }
  return "unknown";
}

Method parse_method(const std::string& s) {
  for (auto m : {Method::Bp, Method::Jacobi, Method::GaussSeidel, Method::Consensus}) {
    if (s == to_string(m)) return m;
  }
  throw Error(ErrorKind::InvalidInput, "unknown method '" + s + "'");
}

}  // namespace dlsolve
