#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shapepose {

enum class ErrorKind {
  NotFound,
  DimensionMismatch,
  EmptySequence,
  ParseError,
  ArityError,
  BoundsError,
  ImageTooSmall,
  DegenerateInput,
  EmptyStateSpace,
  InsufficientData,
  EmptyFrame,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so that
/// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(to_string(kind)) + ": " + what);
}

}  // namespace shapepose
