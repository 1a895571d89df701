#pragma once

#include <stdexcept>
#include <string>

namespace bcast {

/// Base class of every exception thrown by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed shapes, element counts, mode indices or permutations.
class shape_error : public error {
 public:
  using error::error;
};

/// Operand shapes violate the broadcast condition.
class broadcast_error : public error {
 public:
  using error::error;
};

/// A divisor operand contains a zero element.
class division_error : public error {
 public:
  using error::error;
};

/// A least-squares denominator vanished (an all-zero fiber of the known factor).
class singular_error : public error {
 public:
  using error::error;
};

/// Malformed BTF text or I/O failure.
class format_error : public error {
 public:
  using error::error;
};

}  // namespace bcast
