#pragma once

#include <stdexcept>
#include <string>

namespace stapdp {

enum class ErrorKind {
  input,       // malformed or missing input data / configuration
  dimension,   // invalid sizes (basis too small, penalty order too large, ...)
  domain,      // value outside the supported domain (distance beyond radius)
  numerical,   // factorization failure, underflow of all label mass, ...
  convergence  // R-hat check failed under --strict-rhat
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace stapdp
