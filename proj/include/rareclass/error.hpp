// Error taxonomy shared by every module; the C API maps kinds onto status codes.
#pragma once

#include <stdexcept>
#include <string>

namespace rareclass {

enum class ErrorKind {
  io,                // file could not be read or written
  parse,             // malformed numeric cell or JSON document
  schema,            // header or column-name contract violated
  label,             // label value outside {0,1}
  structure,         // ragged row, empty table
  domain,            // argument outside its mathematical domain
  singular,          // rank-deficient information matrix
  degenerate,        // empty class, all-tied sample, no minority rows
  mismatch,          // feature/length mismatch between model and data
  invalid_argument,  // malformed parameter or spec
  calibration,       // intercept bisection failed to converge
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rareclass
