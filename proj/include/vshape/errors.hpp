#pragma once

#include <stdexcept>
#include <string>

namespace vshape {

// Input outside the mathematical domain of an operation (bad grid, negative
// rate, time out of range, non-follower pair...).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Malformed user-facing input: bad CLI flag combination, unknown kind,
// malformed record in an input file.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vshape
