#pragma once

#include <stdexcept>
#include <string>

namespace nladstv {

enum class ErrorKind {
  unsupported_format,
  shape,
  domain,
  configuration,
  degenerate_input,
  io,
  diverged,
};

/// Every failure raised by the library carries one of the kinds above so the
/// CLI can map it onto an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by the solver when an iterate stops being finite.
class DivergenceError : public Error {
 public:
  DivergenceError(int iteration, const std::string& what)
      : Error(ErrorKind::diverged, what), iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace nladstv
