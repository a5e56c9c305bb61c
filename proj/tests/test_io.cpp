#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dlsolve/io.hpp"
#include "dlsolve/solvers.hpp"
#include "support.hpp"

using namespace dlsolve;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "dlsolve_io_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

SparseMatrix parse(const std::string& text) {
  std::istringstream in(text);
  return read_matrix_market(in);
}

const char* kTwoNode =
    "%%MatrixMarket matrix coordinate real general\n"
    "% two nodes\n"
    "2 2 4\n"
    "1 1 1\n"
    "1 2 -0.5\n"
    "2 1 -0.25\n"
    "2 2 1\n";

}  // namespace

TEST(MatrixMarket, ReadsAndSolvesTwoNode) {
  const auto m = scratch("two.mtx"), r = scratch("two.rhs");
  write_text(m, kTwoNode);
  write_text(r, "1\n2\n");
  const auto sys = read_system(m.string(), r.string());
  const auto x = dense_solve(sys);
  EXPECT_NEAR(x[0], 16.0 / 7.0, 1e-15);
  EXPECT_NEAR(x[1], 18.0 / 7.0, 1e-15);
}

TEST(MatrixMarket, BannerCaseAndBlankLines) {
  const auto a = parse(
      "%%matrixmarket MATRIX Coordinate REAL General\n\n%c\n1 1 1\n\n1 1 2.5e0\n\n");
  EXPECT_EQ(a.n(), 1u);
  EXPECT_EQ(a.at(0, 0), 2.5);
}

TEST(MatrixMarket, Errors) {
  try {
    parse("%%MatrixMarket matrix coordinate real general\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  try {
    parse("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 x\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    parse("%%MatrixMarket matrix array real general\n1 1\n1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  EXPECT_THROW_KIND(parse("%%MatrixMarket matrix coordinate real symmetric\n1 1 1\n1 1 1\n"),
                    ErrorKind::ParseError);
  EXPECT_THROW_KIND(parse("%%MatrixMarket matrix coordinate real general\n2 3 0\n"),
                    ErrorKind::DimensionMismatch);
  EXPECT_THROW_KIND(parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 3 1\n"),
                    ErrorKind::ParseError);
  EXPECT_THROW_KIND(parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n1 2 1\n"),
                    ErrorKind::MissingDiagonal);
  EXPECT_THROW_KIND(
      parse("%%MatrixMarket matrix coordinate real general\n1 1 2\n1 1 1\n1 1 2\n"),
      ErrorKind::DuplicateEntry);
  EXPECT_THROW_KIND(parse("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1\n1 1 1\n"),
                    ErrorKind::ParseError);
  EXPECT_THROW_KIND(read_matrix_market_file(scratch("missing.mtx").string()),
                    ErrorKind::InvalidInput);
}

TEST(Rhs, LengthMismatchAndBadValues) {
  const auto m = scratch("len.mtx"), r = scratch("len.rhs");
  write_text(m, kTwoNode);
  write_text(r, "1\n2\n3\n");
  EXPECT_THROW_KIND(read_system(m.string(), r.string()), ErrorKind::DimensionMismatch);

  std::istringstream bad("1\n2 3\n");
  try {
    read_rhs(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream nan("nan\n");
  EXPECT_THROW_KIND(read_rhs(nan), ErrorKind::ParseError);
}

TEST(RoundTrip, BitStable) {
  testsupport::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto sys = testsupport::random_dense_ish(rng, 1 + rng.index(0, 12), 0.4, 3.0);
    std::stringstream m, r;
    write_matrix_market(m, sys.matrix());
    write_rhs(r, sys.rhs());
    const auto a = read_matrix_market(m);
    const auto b = read_rhs(r);
    ASSERT_EQ(a.nnz(), sys.matrix().nnz());
    for (const auto& e : sys.matrix().entries()) EXPECT_EQ(a.at(e.row, e.col), e.value);
    ASSERT_EQ(b.size(), sys.rhs().size());
    for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(b[i], sys.rhs()[i]);

    // Writing the parsed copy reproduces the same bytes.
    std::stringstream m2;
    write_matrix_market(m2, a);
    EXPECT_EQ(m2.str(), m.str());
  }
}

TEST(FormatReal, ShortestRoundTrip) {
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(-2.0), "-2");
  EXPECT_EQ(std::stod(format_real(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(TraceCsv, EmptyFieldsForMissingValues) {
  ConvergenceTrace t;
  TraceRow r0;
  r0.k = 0;
  r0.accounting.messages_sent = 4;
  TraceRow r1;
  r1.k = 1;
  r1.log10_mse = -2.5;
  r1.max_delta = 0.25;
  r1.accounting.messages_sent = 4;
  t.rounds = {r0, r1};
  std::ostringstream out;
  write_trace_csv(out, t);
  EXPECT_EQ(out.str(), "iter,log10_mse,max_delta,messages\n0,,,4\n1,-2.5,0.25,4\n");
}
