#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rpl {

enum class ErrorCode {
  MalformedDocument,
  FeatureFormatMismatch,
  NoCarrierAtPoint,
  PayloadBreaksCarrier,
  NoFeasiblePosition,
  ShapeMismatch,
  DivergedLoss,
  OracleFailure,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the library is reported as an Error; the code
// lets callers (the harness, the CLI) branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rpl
