#pragma once

#include <stdexcept>
#include <string>

namespace anycast {

// Malformed input (bad JSON, bad CSV row, unknown enum value).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error("parse error: " + what) {}
};

// Input parsed but violates a documented invariant.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what)
      : std::runtime_error("validation error: " + what) {}
};

// Argument outside its permitted range.
class RangeError : public std::out_of_range {
 public:
  explicit RangeError(const std::string& what) : std::out_of_range("range error: " + what) {}
};

// Lookup of an identifier (site, policy, block) that does not exist.
class UnknownIdError : public std::runtime_error {
 public:
  explicit UnknownIdError(const std::string& what) : std::runtime_error("unknown id: " + what) {}
};

}  // namespace anycast
