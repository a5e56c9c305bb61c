#include <gtest/gtest.h>

#include <cmath>

#include "dlsolve/analysis.hpp"
#include "dlsolve/engine.hpp"
#include "dlsolve/oracle.hpp"
#include "dlsolve/solvers.hpp"
#include "support.hpp"

using namespace dlsolve;
using testsupport::Rng;

namespace {

SparseSystem example1(std::uint64_t seed = 1) {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::Example1Tree;
  spec.n = 7;
  spec.seed = seed;
  return generate_instance(spec);
}

SparseSystem theta(std::uint64_t seed) {
  GeneratorSpec spec;
  spec.seed = seed;
  const auto edges = theta_edges();
  return system_on_edges(5, edges, spec);
}

SparseSystem random_tree(std::uint64_t seed, std::size_t n) {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::RandomTree;
  spec.n = n;
  spec.seed = seed;
  return generate_instance(spec);
}

bool near(double x, double y, double tol) {
  return std::fabs(x - y) <= tol * std::max(1.0, std::max(std::fabs(x), std::fabs(y)));
}

}  // namespace

// ---------------------------------------------------------------------------
// walk weights

TEST(WalkWeight, Examples) {
  const auto r = residual_matrix(testsupport::two_node());
  EXPECT_EQ(walk_weight(r, {{0}}), 1.0);
  EXPECT_EQ(walk_weight(r, {{0, 1, 0}}), 0.125);
  EXPECT_EQ(walk_set_weight(r, {}), 0.0);
  EXPECT_THROW_KIND(walk_weight(r, {{}}), ErrorKind::InvalidWalk);
  EXPECT_THROW_KIND(walk_weight(r, {{0, 0}}), ErrorKind::InvalidWalk);
}

TEST(WalkWeight, ConcatenationMultiplies) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto sys = testsupport::random_dense_ish(rng, 2 + rng.index(0, 5), 0.6, 0.8);
    const auto r = residual_matrix(sys);
    const auto g = induced_graph(sys);
    // Random walk u of length >= 1, split at an interior position.
    Walk w{{static_cast<NodeId>(rng.index(0, sys.n() - 1))}};
    const std::size_t len = rng.index(1, 6);
    for (std::size_t s = 0; s < len; ++s) {
      const auto nb = g.neighbors(w.nodes.back());
      if (nb.empty()) break;
      w.nodes.push_back(nb[rng.index(0, nb.size() - 1)]);
    }
    const std::size_t cut = rng.index(0, w.nodes.size() - 1);
    const Walk u{{w.nodes.begin(), w.nodes.begin() + cut + 1}};
    const Walk v{{w.nodes.begin() + cut, w.nodes.end()}};
    const double whole = walk_weight(r, w);
    EXPECT_TRUE(near(whole, walk_weight(r, u) * walk_weight(r, v), 1e-14)) << "trial " << trial;
  }
}

TEST(WalkSums, PartialSumExamples) {
  const auto r = residual_matrix(testsupport::two_node());
  const auto s = partial_walk_sum(r, 0, 0, 4);
  EXPECT_DOUBLE_EQ(s.enumerated, 1.140625);
  EXPECT_DOUBLE_EQ(s.matrix_power, 1.140625);
  EXPECT_EQ(partial_walk_sum(r, 0, 1, 0).enumerated, 0.0);
  EXPECT_EQ(partial_walk_sum(r, 0, 1, 0).matrix_power, 0.0);
  // sum_l 0.125^l
  OracleLimits loose;
  loose.max_enum_length = 60;
  const auto long_sum = partial_walk_sum(r, 0, 0, 60, loose);
  EXPECT_NEAR(long_sum.matrix_power, 8.0 / 7.0, 1e-15);
  EXPECT_NEAR(long_sum.enumerated, 8.0 / 7.0, 1e-15);
}

TEST(WalkSums, LengthClassesPartitionMatrixPowers) {
  Rng rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = rng.index(1, 5);
    const auto sys = testsupport::random_dense_ish(rng, n, 0.5, 0.9);
    const auto r = residual_matrix(sys);
    const Eigen::MatrixXd rd = testsupport::dense_residual(sys);
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    for (std::size_t l = 0; l <= 6; ++l) {
      for (NodeId i = 0; i < n; ++i) {
        for (NodeId j = 0; j < n; ++j) {
          const auto walks = enumerate_walks(r, i, j, l);
          for (const auto& w : walks) {
            ASSERT_EQ(w.length(), l);
            ASSERT_EQ(w.nodes.front(), i);
            ASSERT_EQ(w.nodes.back(), j);
          }
          const double sum = walk_set_weight(r, walks);
          EXPECT_TRUE(near(sum, power(i, j), 1e-12)) << "trial " << trial << " l " << l;
        }
      }
      power = power * rd;
    }
  }
}

TEST(WalkSums, Guards) {
  Rng rng(3);
  const auto big = testsupport::random_dense_ish(rng, 9, 0.5, 0.5);
  EXPECT_THROW_KIND(partial_walk_sum(residual_matrix(big), 0, 0, 2), ErrorKind::TooLarge);
  const auto r = residual_matrix(testsupport::two_node());
  EXPECT_THROW_KIND(partial_walk_sum(r, 0, 0, 11), ErrorKind::TooLarge);
  OracleLimits loose;
  loose.max_enum_length = 20;
  EXPECT_NO_THROW(partial_walk_sum(r, 0, 0, 11, loose));
}

// ---------------------------------------------------------------------------
// messages on trees

TEST(RestrictedSubgraph, Examples) {
  const auto g = induced_graph(example1());
  EXPECT_EQ(restricted_subgraph(g, 1, 0, 1), (std::vector<NodeId>{1, 3, 4}));
  EXPECT_EQ(restricted_subgraph(g, 1, 0, 0), (std::vector<NodeId>{1}));
  EXPECT_EQ(restricted_subgraph(g, 0, 1, 1), (std::vector<NodeId>{0, 2}));
  EXPECT_EQ(restricted_subgraph(g, 0, 1, 5), (std::vector<NodeId>{0, 2, 5, 6}));
  EXPECT_THROW_KIND(restricted_subgraph(g, 3, 4, 1), ErrorKind::NotAnEdge);
}

TEST(MessageOracle, Examples) {
  const auto sys = testsupport::two_node();
  const auto m0 = message_oracle(sys, 0, 1, 0);
  EXPECT_EQ(m0.a, 1.0);
  EXPECT_EQ(m0.b, 1.0);

  // Path 0 - 1 - 2, message 1 -> 2 after two rounds: eliminate node 0 into node 1.
  const SparseSystem path(3,
                          {{0, 0, 2.0}, {0, 1, 0.5}, {1, 0, 1.0}, {1, 1, 3.0}, {1, 2, -1.0},
                           {2, 1, 0.25}, {2, 2, 1.0}},
                          {4.0, 1.0, 0.0});
  const auto m = message_oracle(path, 1, 2, 2);
  EXPECT_DOUBLE_EQ(m.a, 3.0 - 1.0 * 0.5 / 2.0);
  EXPECT_DOUBLE_EQ(m.b, 1.0 - 1.0 * 4.0 / 2.0);
  // One round is not enough to see node 0 from node 1 toward 2.
  const auto m1 = message_oracle(path, 1, 2, 1);
  EXPECT_DOUBLE_EQ(m1.a, 2.75);
  EXPECT_DOUBLE_EQ(message_oracle(path, 1, 2, 0).a, 3.0);
}

TEST(MessageOracle, MatchesDeliveredMessagesOnRandomTrees) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto sys = random_tree(seed, 2 + seed % 15);
    const BpProgram program(sys);
    const auto& g = program.graph();
    RunOptions run;
    run.max_rounds = diameter(g) + 1;
    run.stop = {StopKind::FixedRounds, 0.0};
    RoundObserver<BpProgram> obs = [&](std::size_t k, std::span<const BpMessage> delivered,
                                       std::span<const BpNodeState>) {
      for (NodeId v = 0; v < g.n(); ++v) {
        const auto nb = g.neighbors(v);
        for (std::size_t p = 0; p < nb.size(); ++p) {
          const auto& got = delivered[g.offset(v) + p];
          const auto want = message_oracle(sys, nb[p], v, k);
          EXPECT_TRUE(near(got.a, want.a, 1e-12)) << "seed " << seed << " k " << k;
          EXPECT_TRUE(near(got.b, want.b, 1e-12)) << "seed " << seed << " k " << k;
        }
      }
    };
    run_rounds(program, run, obs);
  }
}

// ---------------------------------------------------------------------------
// computation trees

TEST(UnwrapTree, ThetaLayers) {
  const auto g = induced_graph(theta(1));
  const auto t4 = unwrap_tree(g, 0, 4);
  EXPECT_EQ(t4.layer_sizes(), (std::vector<std::size_t>{1, 3, 3, 6, 6}));
  EXPECT_EQ(unwrap_tree(g, 0, 0).layer_sizes(), (std::vector<std::size_t>{1}));

  // Breadth-first listing with parents one layer up.
  for (const auto& u : t4.nodes) {
    if (u.id == t4.root) {
      EXPECT_FALSE(u.parent.has_value());
      continue;
    }
    ASSERT_TRUE(u.parent.has_value());
    EXPECT_LT(*u.parent, u.id);
    EXPECT_EQ(t4.nodes[*u.parent].depth + 1, u.depth);
  }
}

TEST(UnwrapTree, AcyclicGraphIsReRootedCopy) {
  const auto sys = example1();
  const auto g = induced_graph(sys);
  for (NodeId root = 0; root < g.n(); ++root) {
    const auto tree = unwrap_tree(g, root, diameter(g) + 2);
    ASSERT_EQ(tree.nodes.size(), g.n());
    std::vector<bool> seen(g.n(), false);
    for (const auto& u : tree.nodes) {
      EXPECT_FALSE(seen[u.original]);
      seen[u.original] = true;
      EXPECT_EQ(u.depth, bfs_distances(g, root)[u.original]);
    }
    // The unwrapped system has the original solution.
    const auto usys = unwrapped_system(sys, tree);
    const auto xu = testsupport::eigen_solve(usys);
    const auto x = testsupport::eigen_solve(sys);
    for (const auto& u : tree.nodes) EXPECT_NEAR(xu[u.id], x[u.original], 1e-12);
  }
}

TEST(UnwrappedEquivalence, Theta) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto sys = theta(seed);
    for (NodeId root = 0; root < sys.n(); ++root) {
      for (std::size_t t = 0; t <= 5; ++t) {
        const auto c = unwrapped_equivalence_check(sys, root, t);
        EXPECT_TRUE(c.matches) << "seed " << seed << " root " << root << " t " << t << ": "
                               << c.root_solution << " vs " << c.bp_estimate;
      }
    }
  }
}

TEST(UnwrappedEquivalence, LoopyInstancesBothSolvePaths) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::LoopySmall;
    spec.n = 6;
    spec.seed = seed;
    const auto sys = generate_instance(spec);
    OracleLimits tree_path;
    tree_path.max_dense_nodes = 0;  // force leaf-to-root elimination
    for (std::size_t t = 1; t <= 4; ++t) {
      const auto dense = unwrapped_equivalence_check(sys, 0, t);
      const auto elim = unwrapped_equivalence_check(sys, 0, t, 1e-10, tree_path);
      EXPECT_TRUE(dense.matches) << "seed " << seed << " t " << t;
      EXPECT_TRUE(elim.matches) << "seed " << seed << " t " << t;
      EXPECT_TRUE(near(dense.root_solution, elim.root_solution, 1e-11));
    }
  }
}

TEST(UnwrappedEquivalence, Guard) {
  const auto sys = theta(2);
  OracleLimits tiny;
  tiny.max_unwrapped_nodes = 10;
  EXPECT_THROW_KIND(unwrapped_equivalence_check(sys, 0, 6, 1e-10, tiny), ErrorKind::TooLarge);
}
