#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace actloc {

// Caller supplied something that violates an operation's precondition.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed text input. `line` is 1-based, 0 when not applicable.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input whose content does not fit the expected schema.
class SchemaError : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace actloc
