#include "bem/error.hpp"

namespace bem {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::invalid_config: return "invalid-config";
    case ErrorKind::data: return "data-error";
    case ErrorKind::empty_background: return "empty-background";
    case ErrorKind::degenerate_feature: return "degenerate-feature";
    case ErrorKind::degenerate_prototype: return "degenerate-prototype";
    case ErrorKind::undefined_metric: return "undefined-metric";
    case ErrorKind::internal: return "internal";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(to_string(kind)) + ": " + what);
}

}  // namespace bem
