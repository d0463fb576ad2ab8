#ifndef GPL_ERRORS_H_
#define GPL_ERRORS_H_

#include <stdexcept>
#include <string>

namespace gpl {

// Root of every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller-side contract violations: bad shapes, indices, parameter ranges and
// malformed files. The CLI maps these to exit status 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IndexOutOfRange : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InvalidArgument : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& source, int line, const std::string& what)
      : ValidationError(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Numerical failures during optimization (NaN losses or gradients).
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace gpl

#endif  // GPL_ERRORS_H_
