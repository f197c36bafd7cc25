#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qhs {

// Invalid arguments are reported with std::invalid_argument throughout.

/// A function evaluation produced a non-finite value or hit a guarded
/// operation (division by ~0, negative power of zero).
class NumericDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The operation is not defined for this input, e.g. sampling an
/// unbounded set.
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A solver exhausted its budget without producing an acceptable point.
class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Expression syntax error carrying the byte offset of the offending token.
class ParseError : public std::invalid_argument {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::invalid_argument(what + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace qhs
