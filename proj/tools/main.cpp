#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "dlsolve/cli.hpp"

namespace {

void add_instance_flags(CLI::App* cmd, dlsolve::RunConfig& cfg, std::string& kind,
                        std::string& diag) {
  cmd->add_option("--matrix", cfg.matrix_path, "Matrix Market coordinate file");
  cmd->add_option("--rhs", cfg.rhs_path, "right-hand side, one real per line");
  cmd->add_option("--kind", kind,
                  "generator: example1-tree, loopy-small, random-sparse, random-tree, path, star");
  cmd->add_option("--n", cfg.gen.n, "generator node count");
  cmd->add_option("--seed", cfg.seed, "generator seed");
  cmd->add_option("--coeff-lo", cfg.gen.coeff_lo, "off-diagonal lower bound (open)");
  cmd->add_option("--coeff-hi", cfg.gen.coeff_hi, "off-diagonal upper bound (open)");
  cmd->add_option("--diag", diag, "diagonal rule: neighbor-count, unit, or a number");
  cmd->add_option("--avg-degree", cfg.gen.avg_degree, "mean degree for random-sparse");
}

void apply_diag(const std::string& diag, dlsolve::GeneratorSpec& gen) {
  if (diag.empty() || diag == "neighbor-count") {
    gen.diag_rule = dlsolve::DiagRule::NeighborCount;
  } else if (diag == "unit") {
    gen.diag_rule = dlsolve::DiagRule::Unit;
  } else {
    std::size_t used = 0;
    try {
      gen.diag_value = std::stod(diag, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != diag.size()) {
      throw dlsolve::Error(dlsolve::ErrorKind::InvalidInput, "bad --diag '" + diag + "'");
    }
    gen.diag_rule = dlsolve::DiagRule::Explicit;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed solver for sparse linear systems by message passing"};
  app.require_subcommand(1);

  dlsolve::RunConfig cfg;
  std::string kind, diag, method = "bp", reference = "auto";
  bool inject_sign_flip = false;

  auto* generate = app.add_subcommand("generate", "write a generated instance as <out>.mtx/.rhs");
  auto* analyze = app.add_subcommand("analyze", "dominance and walk-summability report");
  auto* solve = app.add_subcommand("solve", "solve and print the convergence trace CSV");
  auto* compare = app.add_subcommand("compare", "bp, jacobi and consensus error side by side");
  auto* verify = app.add_subcommand("verify", "run the oracle checks over seeded ensembles");

  for (auto* cmd : {generate, analyze, solve, compare}) add_instance_flags(cmd, cfg, kind, diag);
  for (auto* cmd : {generate, solve, compare}) cmd->add_option("--out", cfg.out_path, "output path");
  for (auto* cmd : {solve, compare}) {
    cmd->add_option("--max-iters", cfg.max_iters, "round limit")->check(CLI::PositiveNumber);
    cmd->add_option("--tol", cfg.tol, "stop tolerance on the estimate change")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--reference", reference, "auto, dense or none")
        ->check(CLI::IsMember({"auto", "dense", "none"}));
    cmd->add_option("--threads", cfg.threads, "worker threads per round")
        ->check(CLI::PositiveNumber);
  }
  solve->add_option("--method", method, "bp, jacobi, gauss-seidel or consensus")
      ->check(CLI::IsMember({"bp", "jacobi", "gauss-seidel", "consensus"}));
  solve->add_flag("--force", cfg.force, "run bp without a walk-summability certificate");
  verify->add_option("--seed", cfg.seed, "first ensemble seed");
  verify->add_option("--n", cfg.gen.n, "ensemble node count");
  verify->add_flag("--inject-sign-flip", inject_sign_flip)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and friends exit 0; every real usage error is bad input.
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    cfg.n_given = verify->count("--n") > 0;
    if (!kind.empty()) cfg.kind = dlsolve::parse_generator_kind(kind);
    apply_diag(diag, cfg.gen);
    cfg.method = dlsolve::parse_method(method);
    static const std::map<std::string, dlsolve::ReferenceMode> modes{
        {"auto", dlsolve::ReferenceMode::Auto},
        {"dense", dlsolve::ReferenceMode::Dense},
        {"none", dlsolve::ReferenceMode::None}};
    cfg.reference = modes.at(reference);

    if (app.got_subcommand(generate)) return dlsolve::cmd_generate(cfg, std::cout, std::cerr);
    if (app.got_subcommand(analyze)) return dlsolve::cmd_analyze(cfg, std::cout, std::cerr);
    if (app.got_subcommand(solve)) return dlsolve::cmd_solve(cfg, std::cout, std::cerr);
    if (app.got_subcommand(compare)) return dlsolve::cmd_compare(cfg, std::cout, std::cerr);
    return dlsolve::cmd_verify(cfg, std::cout, std::cerr, inject_sign_flip);
  } catch (const dlsolve::Error& e) {
    std::cerr << "error: " << dlsolve::to_string(e.kind()) << ": " << e.what() << '\n';
    return 1;
  }
}
