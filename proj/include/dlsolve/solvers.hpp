#pragma once

// Node programs for the engine (message-passing solver, Jacobi, projection
// consensus), the sequential Gauss-Seidel reference and the dense direct
// solve used as ground truth.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dlsolve/core.hpp"
#include "dlsolve/engine.hpp"

namespace dlsolve {

// ---------------------------------------------------------------------------
// Dense direct solve

/// Row-major square matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t n() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

DenseMatrix to_dense(const SparseMatrix& a);

/// Gaussian elimination with partial pivoting. Throws SingularMatrix when a
/// pivot falls below 1e-14 times the largest magnitude in its original row.
std::vector<double> lu_solve(DenseMatrix a, std::span<const double> b);

/// x* = A^{-1} b.
std::vector<double> dense_solve(const SparseSystem& sys);

// ---------------------------------------------------------------------------
// Message-passing solver

struct BpMessage {
  double a = 0.0;
  double b = 0.0;
};

struct BpNodeState {
  /// Messages sent this round, ordered like neighbors(i).
  std::vector<double> a_out;
  std::vector<double> b_out;
  double a_tilde = 0.0;
  double b_tilde = 0.0;
  double x_hat = 0.0;
  /// Outgoing a-messages so far whose sign disagreed with sign(a_ii).
  std::size_t nonpositive_messages = 0;
};

struct BpSettings {
  /// A message |a_{v->i}| at or below this is singular; negative selects
  /// 1e-12 times the largest |a_ij| of the system.
  double singular_eps = -1.0;
  double divergence_limit = 1e150;
  /// Mutation hook for exercising the oracle harness: subtracts the
  /// recipient's term instead of adding it back. Never set in real runs.
  bool flip_add_back_sign = false;
};

/// Node i at round k >= 1, with inbox messages (a_{v->i}, b_{v->i}) from k - 1:
///   a~ = a_ii - sum_v a_vi a_iv / a_{v->i}
///   b~ = b_i  - sum_v a_iv b_{v->i} / a_{v->i}
///   x^ = b~ / a~
/// and to each neighbor j the full sums with j's own term added back:
///   a_{i->j} = a~ + a_ji a_ij / a_{j->i},  b_{i->j} = b~ + a_ij b_{j->i} / a_{j->i}.
/// Round 0 sends (a_ii, b_i) everywhere and sets x^ = b_i / a_ii.
class BpProgram {
 public:
  using State = BpNodeState;
  using Message = BpMessage;
  static constexpr bool kLocal = true;

  explicit BpProgram(const SparseSystem& sys, BpSettings settings = {});

  const UndirectedGraph& graph() const { return g_; }
  void init(NodeId i, State& s, Outbox<Message>& out, WorkMeter& meter) const;
  void step(NodeId i, State& s, std::span<const Message> inbox, Outbox<Message>& out,
            WorkMeter& meter) const;
  double estimate(const State& s) const { return s.x_hat; }
  std::size_t storage(NodeId i, const State& s) const;

 private:
  UndirectedGraph g_;
  std::vector<double> diag_;
  std::vector<double> rhs_;
  // Indexed like the slots of node i's inbox: a_iv and a_vi for v = neighbors(i)[p].
  std::vector<double> a_row_;
  std::vector<double> a_col_;
  BpSettings settings_;
  double eps_ = 0.0;
};

struct BpSolveOptions {
  std::size_t max_rounds = 1000;
  /// Relative estimate-change tolerance on loopy graphs.
  double tol = 1e-12;
  /// Run even when the instance is not certified walk-summable.
  bool force = false;
  double rho_tol = 1e-9;
  std::optional<std::vector<double>> reference;
  std::size_t threads = 1;
  BpSettings settings;
};

struct SolveResult {
  std::vector<double> solution;
  RunResult run;
  std::vector<std::string> warnings;
  std::size_t nonpositive_messages = 0;
};

/// Acyclic graphs run exactly diameter(G) rounds; loopy graphs run until
/// delta_stop(tol) or max_rounds. Throws NotWalkSummable unless the analyzer
/// says yes or force is set; a forced run carries a warning instead.
SolveResult bp_solve(const SparseSystem& sys, const BpSolveOptions& opts = {});

// ---------------------------------------------------------------------------
// Jacobi

struct JacobiState {
  double x = 0.0;
};

/// x_i(k+1) = (b_i - sum_{j in N_i} a_ij x_j(k)) / a_ii from x_i(0) = b_i / a_ii.
class JacobiProgram {
 public:
  using State = JacobiState;
  using Message = double;
  static constexpr bool kLocal = true;

  explicit JacobiProgram(const SparseSystem& sys, double divergence_limit = 1e150);

  const UndirectedGraph& graph() const { return g_; }
  void init(NodeId i, State& s, Outbox<Message>& out, WorkMeter& meter) const;
  void step(NodeId i, State& s, std::span<const Message> inbox, Outbox<Message>& out,
            WorkMeter& meter) const;
  double estimate(const State& s) const { return s.x; }
  std::size_t storage(NodeId i, const State& s) const;

 private:
  UndirectedGraph g_;
  std::vector<double> diag_;
  std::vector<double> rhs_;
  std::vector<double> a_row_;
  double limit_;
};

// ---------------------------------------------------------------------------
// Projection consensus

struct ConsensusNodeState {
  /// Node's candidate for the whole solution vector.
  std::vector<double> x;
  /// Its own component, the node's estimate.
  double x_hat = 0.0;
};

/// x_i(k+1) = x_i(k) - (1/|N_i|) P_i (|N_i| x_i(k) - sum_{j in N_i} x_j(k)),
/// with P_i = I - a_i a_i^T / (a_i^T a_i) applied through the sparse row a_i,
/// from x_i(0) = (b_i / a_ii) e_i. Every node holds and broadcasts a length-n
/// vector, so this program is not local.
class ConsensusProgram {
 public:
  using State = ConsensusNodeState;
  using Message = std::vector<double>;
  static constexpr bool kLocal = false;

  /// Throws ZeroRow if some row of A is identically zero.
  explicit ConsensusProgram(const SparseSystem& sys);

  const UndirectedGraph& graph() const { return g_; }
  void init(NodeId i, State& s, Outbox<Message>& out, WorkMeter& meter) const;
  void step(NodeId i, State& s, std::span<const Message> inbox, Outbox<Message>& out,
            WorkMeter& meter) const;
  double estimate(const State& s) const { return s.x_hat; }
  std::size_t storage(NodeId i, const State& s) const;

  /// a_i^T x - b_i for a candidate x of node i.
  double row_residual(NodeId i, std::span<const double> x) const;

 private:
  UndirectedGraph g_;
  SparseMatrix a_;
  std::vector<double> rhs_;
  std::vector<double> row_norm2_;
};

// ---------------------------------------------------------------------------
// Gauss-Seidel (sequential reference only, never run on the engine)

/// One in-place sweep in index order. Throws DivergedEstimate past 1e150.
std::vector<double> gauss_seidel_sweep(const SparseSystem& sys, std::vector<double> x);

/// Sweeps from x(0) = D_A^{-1} b. The trace is labelled "sequential-reference"
/// and reports zero messages.
RunResult gauss_seidel_solve(const SparseSystem& sys, const RunOptions& opts);

// ---------------------------------------------------------------------------

enum class Method { Bp, Jacobi, GaussSeidel, Consensus };
const char* to_string(Method m);
Method parse_method(const std::string& s);

}  // namespace dlsolve
