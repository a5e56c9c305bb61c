#include "dlsolve/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace dlsolve {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write '" + path + "'");
  return out;
}

}  // namespace

SparseMatrix read_matrix_market(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;

  if (!std::getline(in, line)) throw ParseError(1, "empty file");
  ++lineno;
  {
    std::istringstream banner(lower(line));
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    if (tag != "%%matrixmarket" || object != "matrix" || format != "coordinate") {
      throw ParseError(lineno, "expected '%%MatrixMarket matrix coordinate' banner");
    }
    if (field != "real" || symmetry != "general") {
      throw ParseError(lineno, "only 'real general' matrices are supported");
    }
  }

  std::size_t rows = 0, cols = 0, nnz = 0;
  bool have_size = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line) || line[0] == '%') continue;
    std::istringstream ss(line);
    std::string extra;
    if (!(ss >> rows >> cols >> nnz) || (ss >> extra)) {
      throw ParseError(lineno, "expected 'rows cols nnz'");
    }
    have_size = true;
    break;
  }
  if (!have_size) throw ParseError(lineno + 1, "missing size line");
  if (rows != cols) {
    throw Error(ErrorKind::DimensionMismatch,
                "matrix is " + std::to_string(rows) + "x" + std::to_string(cols) + ", not square");
  }

  std::vector<Entry> entries;
  entries.reserve(nnz);
  while (entries.size() < nnz) {
    if (!std::getline(in, line)) {
      throw ParseError(lineno + 1, "expected " + std::to_string(nnz) + " entries, found " +
                                       std::to_string(entries.size()));
    }
    ++lineno;
    if (blank(line) || line[0] == '%') continue;
    std::istringstream ss(line);
    long long r = 0, c = 0;
    std::string value_text, extra;
    if (!(ss >> r >> c >> value_text) || (ss >> extra)) {
      throw ParseError(lineno, "expected 'row col value'");
    }
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
    if (ec != std::errc() || ptr != value_text.data() + value_text.size() || !std::isfinite(value)) {
      throw ParseError(lineno, "bad value '" + value_text + "'");
    }
    if (r < 1 || c < 1 || static_cast<std::size_t>(r) > rows || static_cast<std::size_t>(c) > cols) {
      throw ParseError(lineno, "index out of range");
    }
    entries.push_back({static_cast<NodeId>(r - 1), static_cast<NodeId>(c - 1), value});
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (!blank(line)) throw ParseError(lineno, "unexpected content after the last entry");
  }

  SparseMatrix a(rows, std::move(entries));
  for (NodeId i = 0; i < rows; ++i) {
    if (a.at(i, i) == 0.0) {
      throw Error(ErrorKind::MissingDiagonal,
                  "diagonal entry " + std::to_string(i + 1) + " is missing or zero");
    }
  }
  return a;
}

SparseMatrix read_matrix_market_file(const std::string& path) {
  auto in = open_in(path);
  return read_matrix_market(in);
}

std::string format_real(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, ptr);
}

void write_matrix_market(std::ostream& out, const SparseMatrix& a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.n() << ' ' << a.n() << ' ' << a.nnz() << '\n';
  for (const auto& e : a.entries()) {
    out << e.row + 1 << ' ' << e.col + 1 << ' ' << format_real(e.value) << '\n';
  }
}

void write_matrix_market_file(const std::string& path, const SparseMatrix& a) {
  auto out = open_out(path);
  write_matrix_market(out, a);
}

std::vector<double> read_rhs(std::istream& in) {
  std::vector<double> b;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    std::istringstream ss(line);
    std::string text, extra;
    ss >> text;
    if (ss >> extra) throw ParseError(lineno, "expected one real per line");
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
      throw ParseError(lineno, "bad value '" + text + "'");
    }
    b.push_back(v);
  }
  return b;
}

std::vector<double> read_rhs_file(const std::string& path) {
  auto in = open_in(path);
  return read_rhs(in);
}

void write_rhs(std::ostream& out, std::span<const double> b) {
  for (double v : b) out << format_real(v) << '\n';
}

void write_rhs_file(const std::string& path, std::span<const double> b) {
  auto out = open_out(path);
  write_rhs(out, b);
}

SparseSystem read_system(const std::string& matrix_path, const std::string& rhs_path) {
  auto a = read_matrix_market_file(matrix_path);
  auto b = read_rhs_file(rhs_path);
  if (b.size() != a.n()) {
    throw Error(ErrorKind::DimensionMismatch, "rhs has " + std::to_string(b.size()) +
                                                  " values, matrix has " + std::to_string(a.n()) +
                                                  " rows");
  }
  return SparseSystem(std::move(a), std::move(b));
}

void write_trace_csv(std::ostream& out, const ConvergenceTrace& trace) {
  out << "iter,log10_mse,max_delta,messages\n";
  for (const auto& row : trace.rounds) {
    out << row.k << ',';
    if (row.log10_mse) out << format_real(*row.log10_mse);
    out << ',';
    if (row.max_delta) out << format_real(*row.max_delta);
    out << ',' << row.accounting.messages_sent << '\n';
  }
}

}  // namespace dlsolve
