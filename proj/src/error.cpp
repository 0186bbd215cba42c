#include "bps/error.hpp"

namespace bps {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::InvalidOrder: return "invalid-order";
    case ErrorCode::RootFailure: return "root-failure";
    case ErrorCode::Shape: return "shape";
    case ErrorCode::InvalidInterval: return "invalid-interval";
    case ErrorCode::NonFinite: return "non-finite";
    case ErrorCode::Numeric: return "numeric";
    case ErrorCode::Propagation: return "propagation-failure";
    case ErrorCode::UnknownName: return "unknown-name";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Io: return "io";
    case ErrorCode::Internal: return "internal";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace bps
