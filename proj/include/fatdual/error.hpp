#pragma once

#include <stdexcept>
#include <string>

namespace fatdual {

/// Typed domain abort: the input is legal C++ but outside the mathematical
/// contract of the operation (non-Euclidean quiver passed to delta(),
/// census guard exceeded, the recursion leaving the supported algebra
/// class, ...). The CLI maps these to exit code 2.
class DomainError : public std::runtime_error {
public:
  DomainError(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

private:
  std::string code_;
};

/// Internal invariant failure: signals a bug, never bad input.
class InternalError : public std::logic_error {
public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

#define FATDUAL_CHECK(cond, msg)                                               \
  do {                                                                         \
    if (!(cond)) throw ::fatdual::InternalError(msg);                          \
  } while (0)

} // namespace fatdual
