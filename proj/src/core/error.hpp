#pragma once

#include <stdexcept>
#include <string>

namespace kpfc {

enum class ErrorCode {
  InvalidArgument,  // bad parameter value (p >= 1, negative margin, ...)
  Dimension,        // tensor/shape mismatch
  Parse,            // malformed input text
  Schema,           // structurally valid input violating the data contract
  Io,               // file system failure
  Format,           // bad magic / unsupported version
  Corrupt,          // truncated or inconsistent binary payload
  Numeric,          // NaN/Inf or divergence
  Contract,         // API misuse
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

}  // namespace kpfc
