#pragma once

#include <stdexcept>
#include <string>

namespace pamlab {

enum class Errc {
  InvalidArgument,
  InvalidDimension,
  InvalidAlpha,
  NotIntegrable,
  DivergentAtZero,
  QuadratureFailure,
  NonpositiveTime,
  NotRough,
  GridMismatch,
  DivergentDensityAtNode,
  InconsistentSeed,
  UnsupportedCoefficient,
  MissingTime,
  NonpositiveMean,
  PreconditionViolated,
  WeakDisorderViolated,
  MismatchedGrids,
  ThresholdViolated,
  BudgetExceeded,
  RejectionBudgetExceeded,
  ParseError,
  ValidationError,
  IoError,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidDimension: return "InvalidDimension";
    case Errc::InvalidAlpha: return "InvalidAlpha";
    case Errc::NotIntegrable: return "NotIntegrable";
    case Errc::DivergentAtZero: return "DivergentAtZero";
    case Errc::QuadratureFailure: return "QuadratureFailure";
    case Errc::NonpositiveTime: return "NonpositiveTime";
    case Errc::NotRough: return "NotRough";
    case Errc::GridMismatch: return "GridMismatch";
    case Errc::DivergentDensityAtNode: return "DivergentDensityAtNode";
    case Errc::InconsistentSeed: return "InconsistentSeed";
    case Errc::UnsupportedCoefficient: return "UnsupportedCoefficient";
    case Errc::MissingTime: return "MissingTime";
    case Errc::NonpositiveMean: return "NonpositiveMean";
    case Errc::PreconditionViolated: return "PreconditionViolated";
    case Errc::WeakDisorderViolated: return "WeakDisorderViolated";
    case Errc::MismatchedGrids: return "MismatchedGrids";
    case Errc::ThresholdViolated: return "ThresholdViolated";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::RejectionBudgetExceeded: return "RejectionBudgetExceeded";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// field carries the offending config key for ValidationError, line/column for ParseError
class ConfigError : public Error {
 public:
  ConfigError(Errc code, std::string field, const std::string& what, int line = 0, int column = 0)
      : Error(code, what), field_(std::move(field)), line_(line), column_(column) {}
  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  std::string field_;
  int line_;
  int column_;
};

[[noreturn]] inline void fail(Errc c, const std::string& msg) { throw Error(c, msg); }

}  // namespace pamlab
