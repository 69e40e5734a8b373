#ifndef CSKM_ERROR_H_
#define CSKM_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cskm {

// Base for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable or structurally invalid input file.
class InputError : public Error {
 public:
  using Error::Error;
};

// Input that is readable but malformed at a specific line.
class ParseError : public InputError {
 public:
  ParseError(const std::string &what, std::size_t line)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A parameter or configuration value outside its domain.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Lookup of a session, relation or other keyed entity that does not exist.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace cskm

#endif  // CSKM_ERROR_H_
