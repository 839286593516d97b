#include "sondeharm/error.hpp"

namespace sondeharm {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidProfile: return "InvalidProfile";
    case ErrorCode::ZeroUncertainty: return "ZeroUncertainty";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::NoGruan: return "NoGruan";
    case ErrorCode::EmptyMandatory: return "EmptyMandatory";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::ZeroMass: return "ZeroMass";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::AllRestartsFailed: return "AllRestartsFailed";
    case ErrorCode::OptimFailed: return "OptimFailed";
    case ErrorCode::EmptyLevel: return "EmptyLevel";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::EmptyAfterFilter: return "EmptyAfterFilter";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ConfigError:
      return 1;
    case ErrorCode::InvalidProfile:
    case ErrorCode::ZeroUncertainty:
    case ErrorCode::EmptyInput:
    case ErrorCode::OutOfRange:
    case ErrorCode::TooFewPoints:
    case ErrorCode::OutOfDomain:
    case ErrorCode::NoGruan:
    case ErrorCode::EmptyMandatory:
    case ErrorCode::GridMismatch:
    case ErrorCode::EmptyLevel:
    case ErrorCode::ParseError:
    case ErrorCode::SchemaError:
    case ErrorCode::EmptyAfterFilter:
    case ErrorCode::IoError:
      return 2;
    case ErrorCode::SingularSystem:
    case ErrorCode::Unreachable:
    case ErrorCode::InvalidParams:
    case ErrorCode::ZeroMass:
    case ErrorCode::QuadratureFailure:
    case ErrorCode::AllRestartsFailed:
    case ErrorCode::OptimFailed:
      return 3;
  }
  return 3;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

}  // namespace sondeharm
