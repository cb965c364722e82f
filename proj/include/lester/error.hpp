#pragma once

#include <stdexcept>
#include <string>

namespace lester {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed manifest, palette, landmark or config text.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that breaks a domain invariant (unknown label, wrong
// landmark count, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Gap or ordering problem in a numbered frame sequence.
class SequenceError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class RenderError : public Error {
 public:
  using Error::Error;
};

}  // namespace lester
