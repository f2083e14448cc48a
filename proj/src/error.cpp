#include "piia/error.hpp"

namespace piia {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kValidation: return "validation_error";
    case ErrorCode::kUnresolvedName: return "unresolved_name";
    case ErrorCode::kUnsupported: return "unsupported_construct";
    case ErrorCode::kConfiguration: return "configuration_error";
    case ErrorCode::kGateway: return "gateway_error";
    case ErrorCode::kNumeric: return "numeric_error";
    case ErrorCode::kState: return "invalid_state";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

}  // namespace piia
