#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dlsolve {

/// Failure categories shared by every module. The CLI maps them onto exit codes.
enum class ErrorKind {
  InvalidInput,
  ZeroDiagonal,
  DuplicateEntry,
  NonPositiveLambda,
  InvalidWalk,
  NotAnEdge,
  TooLarge,
  SingularMatrix,
  SingularMessage,
  DivergedEstimate,
  ZeroRow,
  NotWalkSummable,
  ParseError,
  DimensionMismatch,
  MissingDiagonal,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failure carrying the 1-based line number of the offending input line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace dlsolve
