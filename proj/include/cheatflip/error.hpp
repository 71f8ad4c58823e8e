#pragma once

#include <stdexcept>
#include <string>

namespace cheatflip {

/// Base class for everything this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document (tree JSON, model string, strategy file).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical invariant failed at runtime. Indicates a solver bug or a
/// falsified bound, never bad user input.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace cheatflip
