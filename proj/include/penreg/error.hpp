#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace penreg {

enum class ErrorKind {
  DimensionMismatch,
  ConstantColumn,
  NonPositive,
  InvalidSparsity,
  InvalidArgument,
  NonFinite,
  SingularPrecision,
  ChainFailed,
  Diverged,
  ModeNotFound,
  HessianSingular,
  PathFailed,
  PathfinderFailed,
  ZeroVariance,
  TooFewTailPoints,
  TooFewDraws,
  MissingMetric,
  LengthMismatch,
  NotPositiveDefinite,
  ZeroSignal,
  ParseError,
  OutcomeTypeMismatch,
  ConfigError,
  IoError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ConstantColumn: return "ConstantColumn";
    case ErrorKind::NonPositive: return "NonPositive";
    case ErrorKind::InvalidSparsity: return "InvalidSparsity";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::SingularPrecision: return "SingularPrecision";
    case ErrorKind::ChainFailed: return "ChainFailed";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::ModeNotFound: return "ModeNotFound";
    case ErrorKind::HessianSingular: return "HessianSingular";
    case ErrorKind::PathFailed: return "PathFailed";
    case ErrorKind::PathfinderFailed: return "PathfinderFailed";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::TooFewTailPoints: return "TooFewTailPoints";
    case ErrorKind::TooFewDraws: return "TooFewDraws";
    case ErrorKind::MissingMetric: return "MissingMetric";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::ZeroSignal: return "ZeroSignal";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::OutcomeTypeMismatch: return "OutcomeTypeMismatch";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library. `kind()` lets callers branch without
/// parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace penreg
