#pragma once

// Synchronous round simulator for node programs on the induced graph.
//
// Round 0 runs every node's init, which emits the first message on each
// outgoing edge. Round k >= 1 hands node i the frozen messages delivered at
// the end of round k - 1 (its inbox, ordered like neighbors(i)) and collects
// exactly one new message per outgoing edge. Delivery happens at the barrier
// between rounds, so a transition can never observe a message of its own
// round, and the trace does not depend on the order nodes are evaluated in.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dlsolve/core.hpp"

namespace dlsolve {

/// Per-node arithmetic operation counter for one transition.
struct WorkMeter {
  std::size_t ops = 0;
  void add(std::size_t k) noexcept { ops += k; }
};

/// Locality budget per node and round: ops <= kOpsPerNeighbor * (1 + |N_i|)
/// and retained storage <= kStoragePerNeighbor * (1 + |N_i|), counted in reals.
inline constexpr std::size_t kOpsPerNeighbor = 16;
inline constexpr std::size_t kStoragePerNeighbor = 8;

struct RoundAccounting {
  std::size_t messages_sent = 0;
  std::vector<std::size_t> per_node_ops;
  std::vector<std::size_t> per_node_storage;
};

struct TraceRow {
  std::size_t k = 0;
  std::vector<double> estimates;
  /// log10(||x_hat - x*||^2 / n); present when a reference was supplied.
  std::optional<double> log10_mse;
  /// max_i |x_hat_i(k) - x_hat_i(k-1)|; absent at k = 0.
  std::optional<double> max_delta;
  RoundAccounting accounting;
};

struct ConvergenceTrace {
  std::string label;
  std::vector<TraceRow> rounds;
};

enum class StopKind {
  /// Run exactly max_rounds rounds.
  FixedRounds,
  /// delta_stop(previous, current, tol).
  EstimateDelta,
  /// Mean squared error against the reference at most tol.
  ErrorBelow,
};

struct StopRule {
  StopKind kind = StopKind::FixedRounds;
  double tol = 0.0;
};

enum class StopReason { StopRuleMet, RoundLimit, Fault };
const char* to_string(StopReason r);

struct SolverFault {
  NodeId node = 0;
  std::size_t round = 0;
  ErrorKind cause = ErrorKind::InvalidInput;
  std::string message;
};

struct RunOptions {
  std::size_t max_rounds = 100;
  StopRule stop;
  std::optional<std::vector<double>> reference;
  /// Worker threads per round; 1 evaluates nodes serially in id order.
  std::size_t threads = 1;
};

struct RunResult {
  ConvergenceTrace trace;
  StopReason reason = StopReason::RoundLimit;
  std::optional<SolverFault> fault;
};

/// True iff max_i |cur_i - prev_i| <= tol * max(1, max_i |cur_i|).
bool delta_stop(std::span<const double> prev, std::span<const double> cur, double tol);

double max_abs_delta(std::span<const double> prev, std::span<const double> cur);

/// ||x - ref||^2 / n.
double mean_squared_error(std::span<const double> x, std::span<const double> ref);

/// Write side of a node's outgoing edges for one round. send(k, m) targets the
/// k-th neighbor in neighbors(i).
template <class Message>
class Outbox {
 public:
  Outbox(const UndirectedGraph& g, NodeId node, std::span<Message> board,
         std::span<unsigned char> written)
      : g_(g), node_(node), board_(board), written_(written) {}

  std::size_t size() const { return g_.degree(node_); }

  void send(std::size_t k, Message m) {
    const std::size_t s = g_.reverse_slot(g_.offset(node_) + k);
    if (written_[s]) {
      throw Error(ErrorKind::InvalidInput, "second message on one edge within a round");
    }
    written_[s] = 1;
    board_[s] = std::move(m);
  }

 private:
  const UndirectedGraph& g_;
  NodeId node_;
  std::span<Message> board_;
  std::span<unsigned char> written_;
};

/// A node program: per-node state, one message type, a round-0 init and a
/// round transition. kLocal declares whether the program is meant to fit the
/// per-node locality budget.
template <class P>
concept NodeProgram = requires(const P& p, NodeId i, typename P::State& s,
                               const typename P::State& cs,
                               std::span<const typename P::Message> inbox,
                               Outbox<typename P::Message>& out, WorkMeter& meter) {
  typename P::State;
  typename P::Message;
  { P::kLocal } -> std::convertible_to<bool>;
  { p.graph() } -> std::same_as<const UndirectedGraph&>;
  { p.init(i, s, out, meter) };
  { p.step(i, s, inbox, out, meter) };
  { p.estimate(cs) } -> std::convertible_to<double>;
  { p.storage(i, cs) } -> std::convertible_to<std::size_t>;
};

/// Observer called after every round with the delivered messages (indexed by
/// slot, see UndirectedGraph) and the node states.
template <class P>
using RoundObserver = std::function<void(std::size_t k, std::span<const typename P::Message>,
                                         std::span<const typename P::State>)>;

template <NodeProgram P>
RunResult run_rounds(const P& program, const RunOptions& opts,
                     const RoundObserver<P>& observer = {}) {
  using Message = typename P::Message;
  using State = typename P::State;
  const UndirectedGraph& g = program.graph();
  const std::size_t n = g.n();

  if (opts.stop.kind == StopKind::ErrorBelow && !opts.reference) {
    throw Error(ErrorKind::InvalidInput, "error stop rule needs a reference solution");
  }
  if (opts.reference && opts.reference->size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "reference length differs from node count");
  }

  std::vector<State> states(n);
  std::vector<Message> delivered(g.slot_count());
  std::vector<Message> pending(g.slot_count());
  std::vector<unsigned char> written(g.slot_count(), 0);
  std::vector<std::size_t> ops(n, 0);
  std::vector<std::optional<SolverFault>> faults(n);

  RunResult result;

  auto transition = [&](std::size_t k, NodeId i) {
    WorkMeter meter;
    Outbox<Message> out(g, i, pending, written);
    try {
      if (k == 0) {
        program.init(i, states[i], out, meter);
      } else {
        std::span<const Message> inbox(delivered.data() + g.offset(i), g.degree(i));
        program.step(i, states[i], inbox, out, meter);
      }
    } catch (const Error& e) {
      faults[i] = SolverFault{i, k, e.kind(), e.what()};
    }
    ops[i] = meter.ops;
  };

  auto run_all = [&](std::size_t k) {
    const std::size_t workers = std::clamp<std::size_t>(opts.threads, 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
      for (NodeId i = 0; i < n; ++i) transition(k, i);
      return;
    }
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
      pool.emplace_back([&, lo, hi] {
        for (NodeId i = lo; i < hi; ++i) transition(k, i);
      });
    }
  };

  std::vector<double> previous;
  for (std::size_t k = 0;; ++k) {
    std::fill(written.begin(), written.end(), 0);
    run_all(k);

    for (NodeId i = 0; i < n; ++i) {
      if (faults[i]) {
        result.reason = StopReason::Fault;
        result.fault = faults[i];
        return result;
      }
    }
    TraceRow row;
    row.k = k;
    row.accounting.messages_sent = static_cast<std::size_t>(
        std::count(written.begin(), written.end(), static_cast<unsigned char>(1)));
    if (row.accounting.messages_sent != g.slot_count()) {
      // Lowest receiving node of an unwritten slot carries the blame.
      const auto s = static_cast<std::size_t>(
          std::find(written.begin(), written.end(), static_cast<unsigned char>(0)) -
          written.begin());
      NodeId sender = 0;
      for (NodeId v = 0; v < n; ++v) {
        if (s >= g.offset(v) && s < g.offset(v) + g.degree(v)) sender = g.neighbors(v)[s - g.offset(v)];
      }
      result.reason = StopReason::Fault;
      result.fault = SolverFault{sender, k, ErrorKind::InvalidInput,
                                 "node did not send on every edge"};
      return result;
    }
    std::swap(delivered, pending);

    row.accounting.per_node_ops = ops;
    row.accounting.per_node_storage.resize(n);
    row.estimates.resize(n);
    for (NodeId i = 0; i < n; ++i) {
      row.estimates[i] = program.estimate(states[i]);
      row.accounting.per_node_storage[i] = program.storage(i, states[i]);
    }
    if (opts.reference) {
      row.log10_mse = std::log10(mean_squared_error(row.estimates, *opts.reference));
    }
    bool stop = false;
    switch (opts.stop.kind) {
      case StopKind::FixedRounds:
        stop = k >= opts.max_rounds;
        break;
      case StopKind::EstimateDelta:
        stop = k > 0 && delta_stop(previous, row.estimates, opts.stop.tol);
        break;
      case StopKind::ErrorBelow:
        stop = mean_squared_error(row.estimates, *opts.reference) <= opts.stop.tol;
        break;
    }
    if (k > 0) row.max_delta = max_abs_delta(previous, row.estimates);
    previous = row.estimates;
    result.trace.rounds.push_back(std::move(row));

    if (observer) observer(k, delivered, states);

    if (stop) {
      result.reason = StopReason::StopRuleMet;
      return result;
    }
    if (k >= opts.max_rounds) {
      result.reason = StopReason::RoundLimit;
      return result;
    }
  }
}

/// Locality audit of a trace against the per-node budget.
struct LocalityReport {
  bool declared_local = true;
  /// Rounds whose message count differs from 2 |E|.
  std::size_t message_count_violations = 0;
  std::size_t op_violations = 0;
  std::size_t storage_violations = 0;

  /// True when the program does not qualify as local: it says so itself, or
  /// some node exceeded its budget on some round.
  bool violates_locality() const {
    return !declared_local || message_count_violations || op_violations || storage_violations;
  }
};

LocalityReport audit_locality(const ConvergenceTrace& trace, const UndirectedGraph& g,
                              bool declared_local);

}  // namespace dlsolve
