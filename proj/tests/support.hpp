#pragma once

// Shared fixtures and independent dense oracles for the test binaries.

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "dlsolve/core.hpp"
#include "dlsolve/error.hpp"

// Expects `stmt` to throw dlsolve::Error of the given kind.
#define EXPECT_THROW_KIND(stmt, expected)                                       \
  do {                                                                          \
    try {                                                                       \
      (void)(stmt);                                                             \
      ADD_FAILURE() << #stmt " did not throw";                                  \
    } catch (const dlsolve::Error& e_) {                                        \
      EXPECT_EQ(e_.kind(), expected) << e_.what();                              \
    }                                                                           \
  } while (0)

namespace testsupport {

/// A = [[1, -0.5], [-0.25, 1]], b = [1, 2]; x* = [16/7, 18/7].
inline dlsolve::SparseSystem two_node() {
  return dlsolve::SparseSystem(2, {{0, 0, 1.0}, {0, 1, -0.5}, {1, 0, -0.25}, {1, 1, 1.0}},
                               {1.0, 2.0});
}

inline Eigen::MatrixXd dense(const dlsolve::SparseMatrix& a) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.n(), a.n());
  for (const auto& e : a.entries()) m(e.row, e.col) = e.value;
  return m;
}

inline Eigen::VectorXd vec(std::span<const double> v) {
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

/// x* by Eigen's full-pivoting LU.
inline std::vector<double> eigen_solve(const dlsolve::SparseSystem& sys) {
  const Eigen::VectorXd x = dense(sys.matrix()).fullPivLu().solve(vec(sys.rhs()));
  return {x.data(), x.data() + x.size()};
}

/// I - D^{-1} A, dense.
inline Eigen::MatrixXd dense_residual(const dlsolve::SparseSystem& sys) {
  const Eigen::MatrixXd a = dense(sys.matrix());
  const Eigen::VectorXd d = a.diagonal();
  return Eigen::MatrixXd::Identity(a.rows(), a.cols()) - d.cwiseInverse().asDiagonal() * a;
}

/// Largest eigenvalue modulus by dense eigen decomposition.
inline double dense_spectral_radius(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  return Eigen::EigenSolver<Eigen::MatrixXd>(m, false).eigenvalues().cwiseAbs().maxCoeff();
}

/// Small hand-rolled generator for property tests (xorshift64*).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : s_(seed * 0x9E3779B97F4A7C15ull + 0x2545F4914F6CDD1Dull) {
    if (s_ == 0) s_ = 1;
  }
  std::uint64_t next() {
    s_ ^= s_ >> 12;
    s_ ^= s_ << 25;
    s_ ^= s_ >> 27;
    return s_ * 0x2545F4914F6CDD1Dull;
  }
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(next() >> 11) * 0x1.0p-53;
  }
  /// Uniform integer in [lo, hi].
  std::size_t index(std::size_t lo, std::size_t hi) { return lo + next() % (hi - lo + 1); }
  bool coin(double p) { return uniform(0.0, 1.0) < p; }

 private:
  std::uint64_t s_;
};

/// Random square matrix with a nonzero diagonal: each off-diagonal entry is
/// present with probability `density`, values in (-scale, scale).
inline dlsolve::SparseSystem random_dense_ish(Rng& rng, std::size_t n, double density,
                                              double scale) {
  std::vector<dlsolve::Entry> entries;
  std::vector<double> b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double sign = rng.coin(0.8) ? 1.0 : -1.0;
    entries.push_back({i, i, sign * rng.uniform(0.5, 2.0)});
    b[i] = rng.uniform(-1.0, 1.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && rng.coin(density)) entries.push_back({i, j, rng.uniform(-scale, scale)});
    }
  }
  return dlsolve::SparseSystem(n, std::move(entries), std::move(b));
}

}  // namespace testsupport
