#pragma once

#include <stdexcept>
#include <string>

namespace vlgen {

// Base class for all errors raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input document does not match the documented schema. The message names
// the offending field, e.g. "objects[2].extents".
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Arguments violate an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace vlgen
