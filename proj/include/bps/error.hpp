#pragma once

#include <stdexcept>
#include <string>

namespace bps {

enum class ErrorCode {
  InvalidArgument = 1,
  InvalidOrder,
  RootFailure,
  Shape,
  InvalidInterval,
  NonFinite,
  Numeric,
  Propagation,
  UnknownName,
  Parse,
  Io,
  Internal,
};

const char* to_string(ErrorCode code);

/// Exception type thrown by every module of the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bps
