#pragma once

#include <stdexcept>
#include <string>

namespace mip {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  invalid_body,
  unsupported,
  precondition,
  singular_point,
  empty_region,
  parse,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace mip
