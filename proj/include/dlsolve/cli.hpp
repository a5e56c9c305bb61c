#pragma once

// Command implementations behind the dlsolve executable. Each command reads a
// RunConfig, writes its machine-readable output to `out` and diagnostics to
// `err`, and returns the process exit code:
//   0  success / converged
//   1  bad input, refused run, or a failed verification
//   2  round limit reached before the stop rule held
//   3  solver fault

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dlsolve/core.hpp"
#include "dlsolve/solvers.hpp"

namespace dlsolve {

enum class ReferenceMode {
  /// Dense solve when n <= kDenseReferenceLimit, none above.
  Auto,
  Dense,
  None,
};

inline constexpr std::size_t kDenseReferenceLimit = 5000;

struct RunConfig {
  std::string command;
  std::string matrix_path;
  std::string rhs_path;
  Method method = Method::Bp;
  std::size_t max_iters = 200;
  double tol = 1e-8;
  std::uint64_t seed = 1;
  std::string out_path;
  /// Generator used by `generate`, and by solve/analyze/compare when no
  /// matrix path is given. gen.seed is kept equal to seed.
  std::optional<GeneratorKind> kind;
  GeneratorSpec gen;
  /// Whether --n was given; verify then uses it as the ensemble size.
  bool n_given = false;
  bool force = false;
  ReferenceMode reference = ReferenceMode::Auto;
  std::size_t threads = 1;
};

/// Throws InvalidInput when tol <= 0 or max_iters == 0.
void validate(const RunConfig& cfg);

/// The instance named by cfg: files when matrix_path is set, otherwise the
/// generator. Throws InvalidInput if neither is available.
SparseSystem load_instance(const RunConfig& cfg);

/// Writes <out>.mtx and <out>.rhs.
int cmd_generate(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// key=value report of the analyzer verdict.
int cmd_analyze(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Trace CSV "iter,log10_mse,max_delta,messages" to out_path or `out`.
int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// CSV "iter,bp,jacobi,consensus" of log10 mse against one dense reference,
/// max_iters fixed rounds per method. A failing method leaves its column
/// empty from the failing round on.
int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err);

struct VerifyOptions {
  std::uint64_t seed = 1;
  /// Random trees for the closed-form message check.
  std::size_t tree_instances = 200;
  std::size_t max_tree_n = 12;
  /// Random matrices for the walk-sum check.
  std::size_t walk_instances = 50;
  std::size_t max_walk_n = 5;
  std::size_t max_walk_length = 8;
  /// Loopy instances for the computation-tree check, t = 1..max_unwrap_depth.
  std::size_t unwrap_instances = 20;
  std::size_t max_unwrap_n = 8;
  std::size_t max_unwrap_depth = 5;
  /// Largest tree the closed-form check will factor densely per message.
  std::size_t max_oracle_tree_n = 64;
  /// Mutation hook for the harness itself.
  bool inject_sign_flip = false;
};

enum class CheckStatus { Pass, Fail, Skipped };

struct CheckOutcome {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  std::size_t instances = 0;
  /// Seed of the first failing instance.
  std::optional<std::uint64_t> failing_seed;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckOutcome> checks;

  bool passed() const;
  /// First failing check, if any.
  const CheckOutcome* first_failure() const;
};

VerifyReport run_verification(const VerifyOptions& opts);

/// Runs run_verification seeded by cfg.seed, with every ensemble size set to
/// cfg.gen.n when --n was given, and prints one line per check.
int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err,
               bool inject_sign_flip = false);

}  // namespace dlsolve
