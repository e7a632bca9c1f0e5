#pragma once

#include <stdexcept>
#include <string>

namespace coag {

/// Failure categories. The CLI maps each one onto a stable exit code.
enum class ErrorKind {
  validation,   // malformed or inconsistent problem instance
  criticality,  // requested time at or beyond the gelation time
  hypothesis,   // instance violates an operation's standing assumption
  numerical     // integration or evaluation breakdown
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace coag
