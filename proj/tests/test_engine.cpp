#include <gtest/gtest.h>

#include "dlsolve/engine.hpp"
#include "dlsolve/solvers.hpp"
#include "support.hpp"

using namespace dlsolve;

namespace {

// Each node sends its own id plus the round; estimate is the sum of its inbox.
struct Echo {
  using State = double;
  using Message = double;
  static constexpr bool kLocal = true;

  UndirectedGraph g;
  // Misbehaviour switches for the fault tests.
  std::optional<std::pair<NodeId, std::size_t>> throw_at;
  std::optional<NodeId> silent;
  std::optional<NodeId> chatty;

  const UndirectedGraph& graph() const { return g; }
  void init(NodeId i, State& s, Outbox<Message>& out, WorkMeter& meter) const {
    s = 0.0;
    meter.add(1);
    for (std::size_t p = 0; p < out.size(); ++p) out.send(p, static_cast<double>(i));
  }
  void step(NodeId i, State& s, std::span<const Message> inbox, Outbox<Message>& out,
            WorkMeter& meter) const {
    s = 0.0;
    for (double m : inbox) s += m;
    meter.add(inbox.size());
    if (throw_at && throw_at->first == i && s >= static_cast<double>(throw_at->second)) {
      throw Error(ErrorKind::DivergedEstimate, "boom");
    }
    if (silent && *silent == i) return;
    for (std::size_t p = 0; p < out.size(); ++p) out.send(p, s);
    if (chatty && *chatty == i && out.size() > 0) out.send(0, s);
  }
  double estimate(const State& s) const { return s; }
  std::size_t storage(NodeId, const State&) const { return 1; }
};

static_assert(NodeProgram<Echo>);
static_assert(NodeProgram<BpProgram>);
static_assert(NodeProgram<JacobiProgram>);
static_assert(NodeProgram<ConsensusProgram>);

RunOptions fixed(std::size_t rounds) {
  RunOptions o;
  o.max_rounds = rounds;
  o.stop = {StopKind::FixedRounds, 0.0};
  return o;
}

}  // namespace

TEST(DeltaStop, Examples) {
  const std::vector<double> a{1.0, 2.0};
  EXPECT_TRUE(delta_stop(a, a, 1e-300));
  EXPECT_FALSE(delta_stop(std::vector<double>{0, 0}, std::vector<double>{1, 0}, 0.5));
  EXPECT_TRUE(delta_stop(std::vector<double>{1, 1}, std::vector<double>{1 + 1e-12, 1}, 1e-9));
  EXPECT_THROW(delta_stop(std::vector<double>{1}, std::vector<double>{1, 2}, 1.0), Error);
}

TEST(DeltaStop, RelativeToLargestEstimate) {
  EXPECT_TRUE(delta_stop(std::vector<double>{1000.0}, std::vector<double>{1000.5}, 1e-3));
  EXPECT_FALSE(delta_stop(std::vector<double>{0.1}, std::vector<double>{0.1005}, 1e-4));
}

TEST(Engine, SingletonSendsNothing) {
  const SparseSystem sys(1, {{0, 0, 4.0}}, {2.0});
  const auto res = run_rounds(BpProgram(sys), fixed(3));
  ASSERT_EQ(res.trace.rounds.size(), 4u);
  for (const auto& row : res.trace.rounds) {
    EXPECT_EQ(row.accounting.messages_sent, 0u);
    EXPECT_EQ(row.estimates[0], 0.5);
  }
}

TEST(Engine, TwoNodeBpOneRoundIsExact) {
  const auto sys = testsupport::two_node();
  auto opts = fixed(1);
  opts.reference = dense_solve(sys);
  const auto res = run_rounds(BpProgram(sys), opts);
  EXPECT_EQ(res.reason, StopReason::StopRuleMet);
  const auto& x = res.trace.rounds.back().estimates;
  EXPECT_NEAR(x[0], 16.0 / 7.0, 1e-15);
  EXPECT_NEAR(x[1], 18.0 / 7.0, 1e-15);
}

TEST(Engine, Example1CountsTwelveMessagesPerRound) {
  GeneratorSpec spec;
  spec.seed = 4;
  const auto res = run_rounds(BpProgram(generate_instance(spec)), fixed(4));
  ASSERT_EQ(res.trace.rounds.size(), 5u);
  for (std::size_t k = 0; k < res.trace.rounds.size(); ++k) {
    EXPECT_EQ(res.trace.rounds[k].k, k);
    EXPECT_EQ(res.trace.rounds[k].accounting.messages_sent, 12u);
  }
  EXPECT_FALSE(res.trace.rounds[0].max_delta.has_value());
  EXPECT_TRUE(res.trace.rounds[1].max_delta.has_value());
  EXPECT_FALSE(res.trace.rounds[1].log10_mse.has_value());
}

TEST(Engine, InboxIsPreviousRoundSnapshot) {
  // Path 0-1-2: round 1 inbox of node 1 holds the round-0 ids {0, 2}.
  Echo p{UndirectedGraph(3, std::vector<std::pair<NodeId, NodeId>>{{0, 1}, {1, 2}})};
  const auto res = run_rounds(p, fixed(2));
  EXPECT_EQ(res.trace.rounds[1].estimates, (std::vector<double>{1.0, 2.0, 1.0}));
  // Round 2: node 1 hears round-1 sums of nodes 0 and 2.
  EXPECT_EQ(res.trace.rounds[2].estimates, (std::vector<double>{2.0, 2.0, 2.0}));
}

TEST(Engine, ParallelMatchesSerialBitForBit) {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::RandomSparse;
  spec.n = 300;
  spec.seed = 12;
  spec.diag_rule = DiagRule::Unit;
  spec.coeff_lo = -0.05;
  spec.coeff_hi = 0.05;
  spec.avg_degree = 6;
  const auto sys = generate_instance(spec);
  auto serial = fixed(15);
  serial.reference = dense_solve(sys);
  auto parallel = serial;
  parallel.threads = 7;
  const BpProgram p(sys);
  const auto a = run_rounds(p, serial);
  const auto b = run_rounds(p, parallel);
  ASSERT_EQ(a.trace.rounds.size(), b.trace.rounds.size());
  for (std::size_t k = 0; k < a.trace.rounds.size(); ++k) {
    EXPECT_EQ(a.trace.rounds[k].estimates, b.trace.rounds[k].estimates);
    EXPECT_EQ(a.trace.rounds[k].log10_mse, b.trace.rounds[k].log10_mse);
    EXPECT_EQ(a.trace.rounds[k].accounting.per_node_ops, b.trace.rounds[k].accounting.per_node_ops);
  }
}

TEST(Engine, FaultAbortsWithPartialTrace) {
  Echo p{UndirectedGraph(3, std::vector<std::pair<NodeId, NodeId>>{{0, 1}, {1, 2}})};
  p.throw_at = std::pair<NodeId, std::size_t>{1, 2};
  const auto res = run_rounds(p, fixed(10));
  EXPECT_EQ(res.reason, StopReason::Fault);
  ASSERT_TRUE(res.fault.has_value());
  EXPECT_EQ(res.fault->node, 1u);
  EXPECT_EQ(res.fault->round, 1u);
  EXPECT_EQ(res.fault->cause, ErrorKind::DivergedEstimate);
  EXPECT_EQ(res.trace.rounds.size(), 1u);
}

TEST(Engine, LowestFaultingNodeIsReported) {
  Echo p{UndirectedGraph(4, std::vector<std::pair<NodeId, NodeId>>{{0, 1}, {1, 2}, {2, 3}})};
  p.throw_at = std::pair<NodeId, std::size_t>{2, 0};
  auto opts = fixed(3);
  opts.threads = 4;
  const auto res = run_rounds(p, opts);
  ASSERT_TRUE(res.fault.has_value());
  EXPECT_EQ(res.fault->node, 2u);
}

TEST(Engine, MissingMessageIsAFault) {
  Echo p{UndirectedGraph(3, std::vector<std::pair<NodeId, NodeId>>{{0, 1}, {1, 2}})};
  p.silent = 2;
  const auto res = run_rounds(p, fixed(3));
  EXPECT_EQ(res.reason, StopReason::Fault);
  EXPECT_EQ(res.fault->round, 1u);
  EXPECT_EQ(res.fault->node, 2u);
}

TEST(Engine, SecondMessageOnAnEdgeIsAFault) {
  Echo p{UndirectedGraph(2, std::vector<std::pair<NodeId, NodeId>>{{0, 1}})};
  p.chatty = 0;
  const auto res = run_rounds(p, fixed(3));
  EXPECT_EQ(res.reason, StopReason::Fault);
  EXPECT_EQ(res.fault->node, 0u);
}

TEST(Engine, StopRules) {
  const auto sys = testsupport::two_node();
  RunOptions delta;
  delta.max_rounds = 50;
  delta.stop = {StopKind::EstimateDelta, 1e-12};
  const auto a = run_rounds(JacobiProgram(sys), delta);
  EXPECT_EQ(a.reason, StopReason::StopRuleMet);
  EXPECT_LT(a.trace.rounds.size(), 51u);

  RunOptions err;
  err.max_rounds = 50;
  err.stop = {StopKind::ErrorBelow, 1e-6};
  EXPECT_THROW(run_rounds(JacobiProgram(sys), err), Error);
  err.reference = dense_solve(sys);
  const auto b = run_rounds(JacobiProgram(sys), err);
  EXPECT_EQ(b.reason, StopReason::StopRuleMet);
  EXPECT_LE(std::pow(10.0, *b.trace.rounds.back().log10_mse), 1e-6);

  RunOptions limit;
  limit.max_rounds = 2;
  limit.stop = {StopKind::EstimateDelta, 1e-15};
  EXPECT_EQ(run_rounds(JacobiProgram(sys), limit).reason, StopReason::RoundLimit);
}

TEST(Engine, ReferenceLengthMustMatch) {
  auto opts = fixed(1);
  opts.reference = std::vector<double>{1.0};
  EXPECT_THROW(run_rounds(BpProgram(testsupport::two_node()), opts), Error);
}

TEST(Locality, AuditFlagsBudgetsAndDeclarations) {
  GeneratorSpec spec;
  spec.seed = 2;
  const auto sys = generate_instance(spec);
  const auto g = induced_graph(sys);
  const auto bp = run_rounds(BpProgram(sys), fixed(6));
  EXPECT_FALSE(audit_locality(bp.trace, g, BpProgram::kLocal).violates_locality());
  const auto cons = run_rounds(ConsensusProgram(sys), fixed(6));
  const auto rep = audit_locality(cons.trace, g, ConsensusProgram::kLocal);
  EXPECT_TRUE(rep.violates_locality());
  EXPECT_EQ(rep.message_count_violations, 0u);

  auto tampered = bp.trace;
  tampered.rounds[2].accounting.messages_sent -= 1;
  tampered.rounds[3].accounting.per_node_ops[0] = 10000;
  const auto bad = audit_locality(tampered, g, true);
  EXPECT_EQ(bad.message_count_violations, 1u);
  EXPECT_EQ(bad.op_violations, 1u);
}

TEST(Metrics, MeanSquaredError) {
  EXPECT_EQ(mean_squared_error(std::vector<double>{1, 2}, std::vector<double>{1, 4}), 2.0);
  EXPECT_EQ(max_abs_delta(std::vector<double>{1, 2}, std::vector<double>{0, 4}), 2.0);
}
