#include "dlsolve/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "dlsolve/analysis.hpp"
#include "dlsolve/io.hpp"
#include "dlsolve/oracle.hpp"

namespace dlsolve {

void validate(const RunConfig& cfg) {
  if (!(cfg.tol > 0.0)) throw Error(ErrorKind::InvalidInput, "--tol must be positive");
  if (cfg.max_iters == 0) throw Error(ErrorKind::InvalidInput, "--max-iters must be at least 1");
}

SparseSystem load_instance(const RunConfig& cfg) {
  if (!cfg.matrix_path.empty()) {
    if (cfg.rhs_path.empty()) throw Error(ErrorKind::InvalidInput, "--matrix needs --rhs");
    return read_system(cfg.matrix_path, cfg.rhs_path);
  }
  if (cfg.kind) {
    GeneratorSpec spec = cfg.gen;
    spec.kind = *cfg.kind;
    spec.seed = cfg.seed;
    return generate_instance(spec);
  }
  throw Error(ErrorKind::InvalidInput, "give --matrix/--rhs or a generator --kind");
}

namespace {

std::optional<std::vector<double>> reference_for(const SparseSystem& sys, ReferenceMode mode,
                                                 std::ostream& err) {
  if (mode == ReferenceMode::None) return std::nullopt;
  if (mode == ReferenceMode::Auto && sys.n() > kDenseReferenceLimit) {
    err << "note: n = " << sys.n() << " exceeds " << kDenseReferenceLimit
        << ", no reference solution; trace reports max_delta only\n";
    return std::nullopt;
  }
  try {
    return dense_solve(sys);
  } catch (const Error& e) {
    err << "note: no reference solution: " << e.what() << '\n';
    return std::nullopt;
  }
}

void report_fault(const SolverFault& f, std::ostream& err) {
  err << "fault: node " << f.node + 1 << ", round " << f.round << ": " << to_string(f.cause)
      << ": " << f.message << '\n';
}

int exit_code(StopReason r) {
  switch (r) {
    case StopReason::StopRuleMet: return 0;
    case StopReason::RoundLimit: return 2;
    case StopReason::Fault: return 3;
  }
  return 1;
}

template <class F>
void with_output(const std::string& path, std::ostream& fallback, F&& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream file(path);
  if (!file) throw Error(ErrorKind::InvalidInput, "cannot write '" + path + "'");
  write(file);
}

}  // namespace

int cmd_generate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!cfg.kind) {
    err << "generate needs --kind\n";
    return 1;
  }
  if (cfg.out_path.empty()) {
    err << "generate needs --out <prefix>\n";
    return 1;
  }
  RunConfig generated = cfg;
  generated.matrix_path.clear();
  const auto sys = load_instance(generated);
  const std::string mtx = cfg.out_path + ".mtx";
  const std::string rhs = cfg.out_path + ".rhs";
  write_matrix_market_file(mtx, sys.matrix());
  write_rhs_file(rhs, sys.rhs());
  out << mtx << '\n' << rhs << '\n';
  return 0;
}

int cmd_analyze(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto sys = load_instance(cfg);
  const auto g = induced_graph(sys);
  const auto rep = analyze(sys);
  out << "n=" << sys.n() << '\n';
  out << "edges=" << g.edge_count() << '\n';
  out << "acyclic=" << (is_acyclic(g) ? "yes" : "no") << '\n';
  out << "diameter=" << diameter(g) << '\n';
  out << "diagonally_dominant=" << (rep.diag_dominant ? "yes" : "no") << '\n';
  out << "rho_abs=" << format_real(rep.rho_abs) << '\n';
  out << "rho_bounds=" << format_real(rep.rho_lower) << ' ' << format_real(rep.rho_upper) << '\n';
  out << "rho_converged=" << (rep.rho_converged ? "yes" : "no") << '\n';
  out << "walk_summable=" << to_string(rep.walk_summable) << '\n';
  if (rep.scaling) {
    out << "scaling=";
    for (std::size_t i = 0; i < rep.scaling->size(); ++i) {
      out << (i ? " " : "") << format_real((*rep.scaling)[i]);
    }
    out << '\n';
  }
  return 0;
}

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  validate(cfg);
  const auto sys = load_instance(cfg);
  const auto reference = reference_for(sys, cfg.reference, err);

  RunOptions run;
  run.max_rounds = cfg.max_iters;
  run.stop = {StopKind::EstimateDelta, cfg.tol};
  run.reference = reference;
  run.threads = cfg.threads;

  RunResult result;
  try {
    switch (cfg.method) {
      case Method::Bp: {
        BpSolveOptions opts;
        opts.max_rounds = cfg.max_iters;
        opts.tol = cfg.tol;
        opts.force = cfg.force;
        opts.reference = reference;
        opts.threads = cfg.threads;
        auto solved = bp_solve(sys, opts);
        for (const auto& w : solved.warnings) err << "warning: " << w << '\n';
        result = std::move(solved.run);
        break;
      }
      case Method::Jacobi:
        result = run_rounds(JacobiProgram(sys), run);
        result.trace.label = "jacobi";
        break;
      case Method::Consensus:
        result = run_rounds(ConsensusProgram(sys), run);
        result.trace.label = "consensus";
        break;
      case Method::GaussSeidel:
        result = gauss_seidel_solve(sys, run);
        err << "trace: " << result.trace.label << " (sequential, not message passing)\n";
        break;
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NotWalkSummable) {
      err << "refused: " << e.what() << "; pass --force to run anyway\n";
      return 1;
    }
    err << "fault: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return 3;
  }

  with_output(cfg.out_path, out, [&](std::ostream& os) { write_trace_csv(os, result.trace); });
  if (result.fault) report_fault(*result.fault, err);
  if (result.reason == StopReason::StopRuleMet && !result.trace.rounds.empty()) {
    err << "converged at iter " << result.trace.rounds.back().k << '\n';
  } else if (result.reason == StopReason::RoundLimit) {
    err << "iteration limit reached\n";
  }
  return exit_code(result.reason);
}

namespace {

using Column = std::vector<std::optional<double>>;

template <NodeProgram P>
Column mse_column(const P& program, const RunOptions& run, const char* name, std::ostream& err) {
  const auto result = run_rounds(program, run);
  Column col(run.max_rounds + 1);
  for (const auto& row : result.trace.rounds) col[row.k] = row.log10_mse;
  if (result.fault) {
    err << name << ": ";
    report_fault(*result.fault, err);
  }
  return col;
}

template <class Make>
Column guarded_column(Make&& make, std::size_t rows, const char* name, std::ostream& err) {
  try {
    return make();
  } catch (const Error& e) {
    err << name << ": " << to_string(e.kind()) << ": " << e.what() << '\n';
    return Column(rows);
  }
}

}  // namespace

int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  validate(cfg);
  const auto sys = load_instance(cfg);
  const auto reference = reference_for(sys, cfg.reference, err);
  if (!reference) {
    err << "compare needs a dense reference solution\n";
    return 1;
  }
  const auto rep = analyze(sys);
  if (rep.walk_summable != Verdict::Yes) {
    err << "warning: instance is not certified walk-summable (verdict "
        << to_string(rep.walk_summable) << ")\n";
  }

  RunOptions run;
  run.max_rounds = cfg.max_iters;
  run.stop = {StopKind::FixedRounds, 0.0};
  run.reference = reference;
  run.threads = cfg.threads;
  const std::size_t rows = cfg.max_iters + 1;

  const Column bp = guarded_column(
      [&] { return mse_column(BpProgram(sys), run, "bp", err); }, rows, "bp", err);
  const Column jacobi = guarded_column(
      [&] { return mse_column(JacobiProgram(sys), run, "jacobi", err); }, rows, "jacobi", err);
  const Column consensus = guarded_column(
      [&] { return mse_column(ConsensusProgram(sys), run, "consensus", err); }, rows,
      "consensus", err);

  with_output(cfg.out_path, out, [&](std::ostream& os) {
    os << "iter,bp,jacobi,consensus\n";
    for (std::size_t k = 0; k < rows; ++k) {
      os << k;
      for (const Column* c : {&bp, &jacobi, &consensus}) {
        os << ',';
        if ((*c)[k]) os << format_real(*(*c)[k]);
      }
      os << '\n';
    }
  });
  return 0;
}

// ---------------------------------------------------------------------------
// verify

bool VerifyReport::passed() const { return first_failure() == nullptr; }

const CheckOutcome* VerifyReport::first_failure() const {
  for (const auto& c : checks) {
    if (c.status == CheckStatus::Fail) return &c;
  }
  return nullptr;
}

namespace {

bool close_rel(double x, double y, double tol) {
  return std::fabs(x - y) <= tol * std::max(std::fabs(x), std::fabs(y));
}

std::size_t size_for(std::uint64_t seed, std::size_t lo, std::size_t hi) {
  if (hi <= lo) return hi;
  return lo + static_cast<std::size_t>(splitmix64(seed ^ 0x5eedu) % (hi - lo + 1));
}

CheckOutcome named(const char* name) {
  CheckOutcome c;
  c.name = name;
  return c;
}

void fail(CheckOutcome& c, std::uint64_t seed, std::string detail) {
  c.status = CheckStatus::Fail;
  c.failing_seed = seed;
  c.detail = std::move(detail);
}

CheckOutcome check_message_oracle(const VerifyOptions& opts) {
  auto c = named("message-oracle");
  if (opts.max_tree_n > opts.max_oracle_tree_n) {
    c.status = CheckStatus::Skipped;
    c.detail = "n = " + std::to_string(opts.max_tree_n) + " exceeds the oracle guard (" +
               std::to_string(opts.max_oracle_tree_n) + ")";
    return c;
  }
  BpSettings settings;
  settings.flip_add_back_sign = opts.inject_sign_flip;
  for (std::size_t s = 0; s < opts.tree_instances; ++s) {
    const std::uint64_t seed = opts.seed + s;
    GeneratorSpec spec;
    spec.kind = GeneratorKind::RandomTree;
    spec.n = size_for(seed, 2, opts.max_tree_n);
    spec.seed = seed;
    const auto sys = generate_instance(spec);
    const BpProgram program(sys, settings);
    const auto& g = program.graph();
    RunOptions run;
    run.max_rounds = diameter(g);
    run.stop = {StopKind::FixedRounds, 0.0};

    std::string mismatch;
    RoundObserver<BpProgram> compare = [&](std::size_t k, std::span<const BpMessage> delivered,
                                           std::span<const BpNodeState>) {
      for (NodeId v = 0; v < g.n() && mismatch.empty(); ++v) {
        const auto nb = g.neighbors(v);
        for (std::size_t p = 0; p < nb.size(); ++p) {
          const BpMessage& m = delivered[g.offset(v) + p];
          const auto want = message_oracle(sys, nb[p], v, k);
          if (!close_rel(m.a, want.a, 1e-12) || !close_rel(m.b, want.b, 1e-12)) {
            std::ostringstream os;
            os << "n=" << spec.n << " k=" << k << " message " << nb[p] + 1 << "->" << v + 1
               << ": (" << format_real(m.a) << ", " << format_real(m.b) << ") vs ("
               << format_real(want.a) << ", " << format_real(want.b) << ")";
            mismatch = os.str();
            break;
          }
        }
      }
    };
    const auto result = run_rounds(program, run, compare);
    ++c.instances;
    if (result.fault) {
      fail(c, seed, "n=" + std::to_string(spec.n) + " fault: " + result.fault->message);
      return c;
    }
    if (!mismatch.empty()) {
      fail(c, seed, mismatch);
      return c;
    }
  }
  return c;
}

CheckOutcome check_walk_sums(const VerifyOptions& opts) {
  auto c = named("walk-sums");
  const OracleLimits limits;
  if (opts.max_walk_n > limits.max_enum_nodes || opts.max_walk_length > limits.max_enum_length) {
    c.status = CheckStatus::Skipped;
    c.detail = "n = " + std::to_string(opts.max_walk_n) + ", L = " +
               std::to_string(opts.max_walk_length) + " exceed the enumeration guard (" +
               std::to_string(limits.max_enum_nodes) + ", " +
               std::to_string(limits.max_enum_length) + ")";
    return c;
  }
  for (std::size_t s = 0; s < opts.walk_instances; ++s) {
    const std::uint64_t seed = opts.seed + s;
    GeneratorSpec spec;
    spec.kind = GeneratorKind::RandomSparse;
    spec.n = size_for(seed, 1, opts.max_walk_n);
    spec.seed = seed;
    spec.diag_rule = DiagRule::Unit;
    spec.coeff_lo = -0.6;
    spec.coeff_hi = 0.6;
    spec.avg_degree = 2.0;
    const auto r = residual_matrix(generate_instance(spec));
    ++c.instances;
    for (NodeId i = 0; i < r.n(); ++i) {
      for (NodeId j = 0; j < r.n(); ++j) {
        const auto sum = partial_walk_sum(r, i, j, opts.max_walk_length, limits);
        const double scale = std::max(1.0, std::fabs(sum.matrix_power));
        if (std::fabs(sum.enumerated - sum.matrix_power) > 1e-12 * scale) {
          fail(c, seed,
               "n=" + std::to_string(spec.n) + " entry (" + std::to_string(i + 1) + ", " +
                   std::to_string(j + 1) + "): enumerated " + format_real(sum.enumerated) +
                   " vs powers " + format_real(sum.matrix_power));
          return c;
        }
      }
    }
  }
  return c;
}

CheckOutcome check_unwrap_layers() {
  auto c = named("unwrap-layers");
  const auto edges = theta_edges();
  const UndirectedGraph g(5, edges);
  const auto sizes = unwrap_tree(g, 0, 4).layer_sizes();
  const std::vector<std::size_t> want{1, 3, 3, 6, 6};
  c.instances = 1;
  if (sizes != want) {
    std::string got;
    for (auto v : sizes) got += (got.empty() ? "" : ",") + std::to_string(v);
    fail(c, 0, "layer sizes " + got + ", expected 1,3,3,6,6");
  }
  return c;
}

CheckOutcome check_unwrapped_equivalence(const VerifyOptions& opts) {
  auto c = named("unwrapped-equivalence");
  std::size_t skipped = 0;
  for (std::size_t s = 0; s < opts.unwrap_instances; ++s) {
    const std::uint64_t seed = opts.seed + s;
    GeneratorSpec spec;
    spec.seed = seed;
    std::optional<SparseSystem> sys;
    if (s == 0) {
      const auto edges = theta_edges();
      spec.n = 5;
      sys.emplace(system_on_edges(5, edges, spec));
    } else {
      spec.kind = GeneratorKind::LoopySmall;
      spec.n = size_for(seed, std::min<std::size_t>(4, opts.max_unwrap_n), opts.max_unwrap_n);
      sys.emplace(generate_instance(spec));
    }
    bool counted = false;
    for (NodeId i = 0; i < sys->n(); ++i) {
      for (std::size_t t = 1; t <= opts.max_unwrap_depth; ++t) {
        UnwrappedCheck check;
        try {
          check = unwrapped_equivalence_check(*sys, i, t);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::TooLarge) throw;
          ++skipped;
          break;
        }
        counted = true;
        if (!check.matches) {
          fail(c, seed,
               "n=" + std::to_string(sys->n()) + " root " + std::to_string(i + 1) + " t=" +
                   std::to_string(t) + ": tree " + format_real(check.root_solution) + " vs bp " +
                   format_real(check.bp_estimate));
          ++c.instances;
          return c;
        }
      }
    }
    if (counted) ++c.instances;
  }
  if (skipped) {
    c.detail = std::to_string(skipped) + " root(s) stopped early at the unwrapped-size guard";
    if (c.instances == 0) c.status = CheckStatus::Skipped;
  }
  return c;
}

}  // namespace

VerifyReport run_verification(const VerifyOptions& opts) {
  VerifyReport rep;
  rep.checks.push_back(check_message_oracle(opts));
  rep.checks.push_back(check_walk_sums(opts));
  rep.checks.push_back(check_unwrap_layers());
  rep.checks.push_back(check_unwrapped_equivalence(opts));
  return rep;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err,
               bool inject_sign_flip) {
  VerifyOptions opts;
  opts.seed = cfg.seed;
  opts.inject_sign_flip = inject_sign_flip;
  if (cfg.n_given) {
    opts.max_tree_n = cfg.gen.n;
    opts.max_walk_n = cfg.gen.n;
    opts.max_unwrap_n = cfg.gen.n;
  }
  const auto rep = run_verification(opts);
  for (const auto& c : rep.checks) {
    switch (c.status) {
      case CheckStatus::Pass:
        out << "PASS " << c.name << " instances=" << c.instances;
        if (!c.detail.empty()) out << " (" << c.detail << ")";
        out << '\n';
        break;
      case CheckStatus::Skipped:
        out << "SKIP " << c.name << ": " << c.detail << '\n';
        break;
      case CheckStatus::Fail:
        out << "FAIL " << c.name << " seed=" << *c.failing_seed << ": " << c.detail << '\n';
        break;
    }
  }
  if (const auto* f = rep.first_failure()) {
    err << "verification failed: check " << f->name << ", seed " << *f->failing_seed << '\n';
    return 1;
  }
  return 0;
}

}  // namespace dlsolve
