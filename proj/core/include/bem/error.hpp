#pragma once

#include <stdexcept>
#include <string>

namespace bem {

enum class ErrorKind {
  invalid_argument,
  invalid_config,
  data,
  empty_background,
  degenerate_feature,
  degenerate_prototype,
  undefined_metric,
  internal,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` lets callers (the CLI in
/// particular) map failures to exit codes without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace bem
