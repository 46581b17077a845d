#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smoothlab {

enum class ErrorKind {
  invalid_input,
  out_of_regime,
  size_limit,
  degenerate_plane,
  unbounded_shadow,
  invalid_start,
  infeasible_margin,
  numerical,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::out_of_regime: return "out-of-regime";
    case ErrorKind::size_limit: return "size-limit";
    case ErrorKind::degenerate_plane: return "degenerate-plane";
    case ErrorKind::unbounded_shadow: return "unbounded-shadow";
    case ErrorKind::invalid_start: return "invalid-start";
    case ErrorKind::infeasible_margin: return "infeasible-margin";
    case ErrorKind::numerical: return "numerical";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the ErrorKind tags so
/// callers (notably the CLI) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace smoothlab
