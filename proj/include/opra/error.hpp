#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace opra {

/// Machine-readable failure category. The HTTP layer maps these onto status
/// codes, the CLI onto exit codes.
enum class ErrorCode {
  syntax,           // malformed text or JSON document
  invalid_argument, // well-formed input that violates a domain invariant
  not_found,        // unknown poll, session, student, ...
  conflict,         // operation not allowed in the current state
  degenerate,       // estimation problem has no finite solution
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::syntax: return "syntax_error";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::degenerate: return "degenerate";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code), reason_(to_string(code)) {}

  /// `reason` is a finer machine-readable code such as "poll_closed".
  Error(ErrorCode code, std::string reason, const std::string& message)
      : std::runtime_error(message), code_(code), reason_(std::move(reason)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  ErrorCode code_;
  std::string reason_;
};

/// Document failure with a 1-based source position. Usually a syntax error,
/// but also carries semantic rejections (unknown id, bad count) so the
/// position survives.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t line, std::size_t column, const std::string& what,
              ErrorCode code = ErrorCode::syntax)
      : Error(code, "line " + std::to_string(line) + ", column " +
                                     std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

[[noreturn]] inline void fail(ErrorCode code, std::string reason, const std::string& message) {
  throw Error(code, std::move(reason), message);
}

}  // namespace opra
