#pragma once

#include <stdexcept>
#include <string>

namespace behavcal {

// Base for every error raised by the library. Callers that only care about
// "something in behavcal failed" catch this; the subclasses let the CLI map
// failures to distinct exit codes and messages.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value outside its documented domain (bad config field, out-of-range
// parameter, unknown enum spelling).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Not enough observations (or the wrong kind) to compute the requested
// quantity.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

// Data present but numerically degenerate: zero variance, collinear design,
// constant series.
class DegenerateData : public Error {
 public:
  using Error::Error;
};

// File-system or format problems while reading/writing artifacts.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace behavcal
