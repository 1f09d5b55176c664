#pragma once

#include <stdexcept>
#include <string>

namespace sdqm {

// Base of everything the library throws on bad input or failed computation.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file content (JSON syntax, binary layout).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Bad run configuration or mismatched model/table schema. Maps to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Numerical preconditions not met (empty input, degenerate design, ...).
class ComputeError : public Error {
 public:
  using Error::Error;
};

}  // namespace sdqm
