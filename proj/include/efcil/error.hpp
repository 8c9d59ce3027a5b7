#pragma once

#include <stdexcept>
#include <string>

namespace efcil {

enum class ErrorCode {
  InvalidArgument,
  Parse,
  Io,
  Numeric,
  Config,
  Infeasible,
};

/// Every failure raised by the core library. The C API maps `code()` onto
/// its status enum, so callers of either surface see the same taxonomy.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace efcil
