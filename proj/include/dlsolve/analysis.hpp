#pragma once

// Instance classification: strict diagonal dominance, walk-summability via the
// spectral radius of |R| with R = I - D_A^{-1} A, generalized diagonal
// dominance certificates, and conversion of non-square problems.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dlsolve/core.hpp"

namespace dlsolve {

/// R = I - D_A^{-1} A: off-diagonal r_ij = -a_ij / a_ii, zero diagonal.
/// Holds exactly the off-diagonal pattern of A.
class ResidualMatrix {
 public:
  explicit ResidualMatrix(SparseMatrix r) : r_(std::move(r)) {}

  std::size_t n() const noexcept { return r_.n(); }
  const SparseMatrix& matrix() const noexcept { return r_; }
  double at(NodeId i, NodeId j) const { return r_.at(i, j); }

  /// Elementwise absolute value |R|.
  SparseMatrix absolute() const { return r_.abs(); }

 private:
  SparseMatrix r_;
};

/// Throws ZeroDiagonal if any a_ii is zero.
ResidualMatrix residual_matrix(const SparseMatrix& a);
ResidualMatrix residual_matrix(const SparseSystem& sys);

struct SpectralEstimate {
  double value = 0.0;
  /// Certified Collatz-Wielandt bounds: lower <= rho <= upper.
  double lower = 0.0;
  double upper = 0.0;
  /// False when some irreducible block hit max_iter before its bracket closed.
  bool converged = true;
  std::size_t iterations = 0;
};

/// Spectral radius of a nonnegative square matrix.
///
/// The matrix is split into strongly connected components; the radius is the
/// largest block radius. A 1x1 block contributes its diagonal. Larger blocks
/// are irreducible, so power iteration on I + M (primitive, hence no
/// oscillation on periodic blocks) from the all-ones vector converges to the
/// Perron vector. Each block stops once its Collatz-Wielandt bracket
/// max_i (Mv)_i/v_i - min_i (Mv)_i/v_i is at most tol * max(1, lambda); the
/// reported lambda is sum(Mv)/sum(v), clamped into the tightest bracket seen.
///
/// Throws InvalidInput on a negative entry or tol <= 0. max_iter = 0 selects
/// the default 10 n + 1000.
SpectralEstimate spectral_radius_nonneg(const SparseMatrix& m, double tol = 1e-12,
                                        std::size_t max_iter = 0);

/// |a_ii| > sum_{j != i} |a_ij| for every row. Ties are not dominant.
bool is_diagonally_dominant(const SparseMatrix& a);
bool is_diagonally_dominant(const SparseSystem& sys);

enum class Verdict { Yes, No, Indeterminate };
const char* to_string(Verdict v);

struct DominanceReport {
  bool diag_dominant = false;
  /// Estimate of rho(|R|).
  double rho_abs = 0.0;
  /// Certified bounds on rho(|R|).
  double rho_lower = 0.0;
  double rho_upper = 0.0;
  double rho_tol = 1e-9;
  bool rho_converged = true;
  /// Yes iff rho_upper < 1 - rho_tol, No iff rho_lower > 1 + rho_tol,
  /// otherwise Indeterminate. An unconverged bracket can still decide.
  Verdict walk_summable = Verdict::Indeterminate;
  /// Positive d with |a_ii| d_i > sum_{j != i} |a_ij| d_j for every i.
  std::optional<std::vector<double>> scaling;
};

struct AnalyzeOptions {
  double rho_tol = 1e-9;
  std::size_t max_iter = 0;
};

DominanceReport analyze(const SparseSystem& sys, const AnalyzeOptions& opts = {});

/// Checks |a_ii| d_i > sum_{j != i} |a_ij| d_j with all d_i > 0.
bool is_scaling_certificate(const SparseMatrix& a, std::span<const double> d);

/// Scaling d that makes D^{-1} A D strictly diagonally dominant, or nothing.
///
/// Returns nothing unless rho(|R|) < 1 - rho_tol is certified. The candidate is the
/// solution of (I - |R|) d = 1, i.e. the comparison matrix M(A) applied
/// inversely to |diag A|, computed by the Neumann iteration d <- 1 + |R| d.
/// It is only returned when is_scaling_certificate() accepts it.
std::optional<std::vector<double>> find_gdd_scaling(const SparseSystem& sys,
                                                    const AnalyzeOptions& opts = {});

// ---------------------------------------------------------------------------
// Pre-processing of non-square problems

/// Rectangular sparse matrix, only used as pre-processing input.
struct RectMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Entry> entries;
};

/// Least squares: returns (A^T A, A^T b). Requires rows >= cols. Throws
/// ZeroDiagonal when some column of A is entirely zero.
SparseSystem preprocess_overdetermined(const RectMatrix& a, std::span<const double> b);

/// Regularization: returns (A + lambda I, b) for a square A. Throws
/// NonPositiveLambda for lambda <= 0.
SparseSystem preprocess_underdetermined(const RectMatrix& a, std::span<const double> b,
                                        double lambda);

}  // namespace dlsolve
