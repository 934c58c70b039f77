#pragma once

#include <stdexcept>
#include <string>

namespace etd {

// Base for every error the toolkit raises. `kind()` is a stable short name
// ("UnknownMagic", "InsufficientRows", ...) used in CLI diagnostics and tests.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Bad invocation (unknown algorithm, malformed flag value). The CLI maps it to exit code 2.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& message) : Error("UsageError", message) {}
};

}  // namespace etd
