#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qvi {

enum class Errc {
  DimensionMismatch,
  NonPositiveRadius,
  InvalidSet,
  EmptySetSuspected,
  NotCompact,
  DomainViolation,
  NoValidatedNormal,
  ArgminPoint,
  InfeasiblePoint,
  NoConvergence,
  OnlyTrivialCertificates,
  EmptyConstraintSet,
  TruncationEmpty,
  InfeasibleCandidate,
  SyntaxError,
  UnknownIdentifier,
  ArityError,
  DivisionByZero,
  DomainError,
  InvalidInput,
  SchemaError,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Parse failure inside an expression; line and column are 1-based.
class SyntaxError : public Error {
 public:
  SyntaxError(Errc code, const std::string& message, std::size_t line, std::size_t column);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string message_;
  std::size_t line_;
  std::size_t column_;
};

}  // namespace qvi
