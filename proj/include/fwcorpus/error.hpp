#pragma once

#include <stdexcept>
#include <string>

namespace fwcorpus {

// Base class for every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Input is syntactically malformed.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Input is well-formed but violates a domain rule or precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace fwcorpus
