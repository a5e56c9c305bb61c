#include "dlsolve/engine.hpp"

namespace dlsolve {

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::StopRuleMet: return "stop-rule-met";
    case StopReason::RoundLimit: return "round-limit";
    case StopReason::Fault: return "fault";
  }
  return "unknown";
}

double max_abs_delta(std::span<const double> prev, std::span<const double> cur) {
  if (prev.size() != cur.size()) {
    throw Error(ErrorKind::DimensionMismatch, "estimate vectors differ in length");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < cur.size(); ++i) m = std::max(m, std::fabs(cur[i] - prev[i]));
  return m;
}

bool delta_stop(std::span<const double> prev, std::span<const double> cur, double tol) {
  double scale = 1.0;
  for (double x : cur) scale = std::max(scale, std::fabs(x));
  return max_abs_delta(prev, cur) <= tol * scale;
}

double mean_squared_error(std::span<const double> x, std::span<const double> ref) {
  if (x.size() != ref.size()) {
    throw Error(ErrorKind::DimensionMismatch, "estimate and reference differ in length");
  }
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - ref[i];
    s += d * d;
  }
  return s / static_cast<double>(x.size());
}

LocalityReport audit_locality(const ConvergenceTrace& trace, const UndirectedGraph& g,
                              bool declared_local) {
  LocalityReport rep;
  rep.declared_local = declared_local;
  for (const auto& row : trace.rounds) {
    if (row.accounting.messages_sent != g.slot_count()) ++rep.message_count_violations;
    for (NodeId i = 0; i < g.n(); ++i) {
      const std::size_t budget = 1 + g.degree(i);
      if (row.accounting.per_node_ops[i] > kOpsPerNeighbor * budget) ++rep.op_violations;
      if (row.accounting.per_node_storage[i] > kStoragePerNeighbor * budget) {
        ++rep.storage_violations;
      }
    }
  }
  return rep;
}

}  // namespace dlsolve
