#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sondeharm {

enum class ErrorCode {
  InvalidProfile,
  ZeroUncertainty,
  EmptyInput,
  OutOfRange,
  TooFewPoints,
  SingularSystem,
  Unreachable,
  OutOfDomain,
  NoGruan,
  EmptyMandatory,
  GridMismatch,
  InvalidParams,
  ZeroMass,
  QuadratureFailure,
  AllRestartsFailed,
  OptimFailed,
  EmptyLevel,
  ParseError,
  SchemaError,
  EmptyAfterFilter,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Process exit code for an error: 1 usage/config, 2 data, 3 numerical.
int exit_code_for(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace sondeharm
