#pragma once
#include <stdexcept>
#include <string>

namespace bonnetlab {

// exit_code is what the CLI process returns when the exception escapes:
// 2 conformality rejection, 3 schema/config/io, 4 precondition refusal.
struct Error : std::runtime_error {
  int exit_code;
  explicit Error(const std::string& msg, int code = 1)
      : std::runtime_error(msg), exit_code(code) {}
};

struct SchemaError : Error {
  explicit SchemaError(const std::string& msg) : Error(msg, 3) {}
};

struct ConformalityError : Error {
  double residual;
  ConformalityError(const std::string& msg, double r) : Error(msg, 2), residual(r) {}
};

struct PreconditionError : Error {
  explicit PreconditionError(const std::string& msg) : Error(msg, 4) {}
};

}  // namespace bonnetlab
