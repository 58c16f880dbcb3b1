#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace phm {

enum class ErrorKind {
  Io,
  ParseError,
  ColorMissing,
  ConfigError,
  EmptyCloud,
  CloudTooSmall,
  TooManySeeds,
  ShapeError,
  DomainError,
  DegeneratePatch,
  SpectralError,
  EmptyWCM,
  NoValidPatches,
  FitError,
  CorrelationUndefined,
  TestUndefined,
};

/// Coarse grouping used by the CLI to pick an exit status.
enum class ErrorClass { Parse = 1, Precondition = 2, Numerical = 3 };

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "Io";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ColorMissing: return "ColorMissing";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::EmptyCloud: return "EmptyCloud";
    case ErrorKind::CloudTooSmall: return "CloudTooSmall";
    case ErrorKind::TooManySeeds: return "TooManySeeds";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::DegeneratePatch: return "DegeneratePatch";
    case ErrorKind::SpectralError: return "SpectralError";
    case ErrorKind::EmptyWCM: return "EmptyWCM";
    case ErrorKind::NoValidPatches: return "NoValidPatches";
    case ErrorKind::FitError: return "FitError";
    case ErrorKind::CorrelationUndefined: return "CorrelationUndefined";
    case ErrorKind::TestUndefined: return "TestUndefined";
  }
  return "Unknown";
}

constexpr ErrorClass classify(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
    case ErrorKind::ParseError:
    case ErrorKind::ColorMissing:
    case ErrorKind::ConfigError:
      return ErrorClass::Parse;
    case ErrorKind::EmptyCloud:
    case ErrorKind::CloudTooSmall:
    case ErrorKind::TooManySeeds:
    case ErrorKind::ShapeError:
    case ErrorKind::DomainError:
    case ErrorKind::DegeneratePatch:
      return ErrorClass::Precondition;
    default:
      return ErrorClass::Numerical;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace phm
