#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace piia {

enum class ErrorCode {
  kParse,
  kValidation,
  kUnresolvedName,
  kUnsupported,
  kConfiguration,
  kGateway,
  kNumeric,
  kState,
  kNotFound,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// Single exception type for the library; the code lets callers (and the
// HTTP service) map failures without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace piia
