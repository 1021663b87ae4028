#pragma once

#include <stdexcept>
#include <string>

namespace raam {

enum class ErrorKind {
  Config,     // bad parameters or configuration
  Io,         // file could not be opened, read or written
  Format,     // file exists but its contents are malformed
  Index,      // id or position out of range
  Numeric,    // non-finite value
  Structure,  // shape or tree mismatch
  Span,       // overlapping spans in the short-term memory
  Capacity,   // short-term memory is full
  Policy,     // adjacency rule violated
  Size,       // problem too large for the requested strategy
  Lookup,     // unknown token
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Process exit code for an error kind: 2 usage/config, 3 I/O, 4 numeric.
int exit_code(ErrorKind kind);

}  // namespace raam
