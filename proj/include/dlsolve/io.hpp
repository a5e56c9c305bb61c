#pragma once

// Matrix Market coordinate files (real, general), one-real-per-line rhs
// files and CSV traces. Indices are 1-based in files. Reals are printed with
// 17 significant digits so a write/read cycle reproduces every bit.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dlsolve/core.hpp"
#include "dlsolve/engine.hpp"

namespace dlsolve {

/// Parses "%%MatrixMarket matrix coordinate real general", optional '%'
/// comment lines, a "rows cols nnz" line and nnz "row col value" lines.
/// Throws ParseError (with line number), DimensionMismatch for a non-square
/// size line, MissingDiagonal when some a_ii is absent or zero, and
/// DuplicateEntry for a repeated position.
SparseMatrix read_matrix_market(std::istream& in);
SparseMatrix read_matrix_market_file(const std::string& path);

void write_matrix_market(std::ostream& out, const SparseMatrix& a);
void write_matrix_market_file(const std::string& path, const SparseMatrix& a);

/// Blank lines are skipped. Throws ParseError on anything else that is not a real.
std::vector<double> read_rhs(std::istream& in);
std::vector<double> read_rhs_file(const std::string& path);

void write_rhs(std::ostream& out, std::span<const double> b);
void write_rhs_file(const std::string& path, std::span<const double> b);

/// Matrix plus rhs; DimensionMismatch when their lengths disagree.
SparseSystem read_system(const std::string& matrix_path, const std::string& rhs_path);

/// Shortest text that parses back to exactly x (at most 17 significant digits).
std::string format_real(double x);

/// "iter,log10_mse,max_delta,messages"; missing values are empty fields.
void write_trace_csv(std::ostream& out, const ConvergenceTrace& trace);

}  // namespace dlsolve
