#include "qvi/errors.hpp"

namespace qvi {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonPositiveRadius: return "NonPositiveRadius";
    case Errc::InvalidSet: return "InvalidSet";
    case Errc::EmptySetSuspected: return "EmptySetSuspected";
    case Errc::NotCompact: return "NotCompact";
    case Errc::DomainViolation: return "DomainViolation";
    case Errc::NoValidatedNormal: return "NoValidatedNormal";
    case Errc::ArgminPoint: return "ArgminPoint";
    case Errc::InfeasiblePoint: return "InfeasiblePoint";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::OnlyTrivialCertificates: return "OnlyTrivialCertificates";
    case Errc::EmptyConstraintSet: return "EmptyConstraintSet";
    case Errc::TruncationEmpty: return "TruncationEmpty";
    case Errc::InfeasibleCandidate: return "InfeasibleCandidate";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::UnknownIdentifier: return "UnknownIdentifier";
    case Errc::ArityError: return "ArityError";
    case Errc::DivisionByZero: return "DivisionByZero";
    case Errc::DomainError: return "DomainError";
    case Errc::InvalidInput: return "InvalidInput";
    case Errc::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

SyntaxError::SyntaxError(Errc code, const std::string& message, std::size_t line, std::size_t column)
    : Error(code, message + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
      message_(message),
      line_(line),
      column_(column) {}

}  // namespace qvi
