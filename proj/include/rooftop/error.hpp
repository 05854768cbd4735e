#pragma once

#include <stdexcept>
#include <string>

namespace rooftop {

// Base for every error raised by the library. The CLI maps all of these to
// exit code 1 with what() as the diagnostic line.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// RoI whose area in feature-cell units is too small to sample.
class DegenerateRoi : public Error {
 public:
  using Error::Error;
};

// Box with zero area where a positive extent is required (mask pasting).
class DegenerateBox : public Error {
 public:
  using Error::Error;
};

// Malformed serialized data: bad RLE run sums, broken records, bad headers.
class CorruptData : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rooftop
