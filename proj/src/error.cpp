#include "raam/error.hpp"

namespace raam {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Index: return "index error";
    case ErrorKind::Numeric: return "numeric error";
    case ErrorKind::Structure: return "structure error";
    case ErrorKind::Span: return "span error";
    case ErrorKind::Capacity: return "capacity error";
    case ErrorKind::Policy: return "policy error";
    case ErrorKind::Size: return "size error";
    case ErrorKind::Lookup: return "lookup error";
  }
  return "error";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
    case ErrorKind::Format:
      return 3;
    case ErrorKind::Numeric:
      return 4;
    default:
      return 2;
  }
}

}  // namespace raam
