#pragma once

#include <stdexcept>
#include <string>

namespace bosim {

// Base for every error raised by the library. Callers that only care about
// "something in the simulation went wrong" catch this one.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated (bad shape, out-of-range index,
// negative inverse temperature, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Exact enumeration would exceed the configured state-count guard.
class StateSpaceTooLarge : public Error {
 public:
  using Error::Error;
};

// The ground-state sign pattern is not unique, so the error probability is
// not defined for this instance.
class DegenerateGroundState : public Error {
 public:
  using Error::Error;
};

// An iterative procedure (bisection bracket, equilibration detection, ODE
// step control) did not reach its target.
class NotConverged : public Error {
 public:
  using Error::Error;
};

// A numerical invariant (normalization, positivity, Hermiticity) was broken
// beyond its slack.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

// Malformed input text; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace bosim
