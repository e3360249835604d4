#ifndef PHONOPROBE_ERROR_HPP
#define PHONOPROBE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace phonoprobe {

enum class ErrorKind {
  parse,          // malformed text input (TSV row, pattern, config)
  validation,     // well-formed input violating a data invariant
  classification, // phone label outside the inventory
  ambiguity,      // token claimed by two groups of one contrast
  format,         // binary store magic/version/checksum mismatch
  corruption,     // truncated or inconsistent binary payload
  contract,       // caller broke an API precondition
  data,           // numerically unusable data (non-finite, degenerate)
  insufficient,   // a class or label has too few samples
  metric,         // metric undefined for the given inputs
  io,             // filesystem failure
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

/// Re-throws `e` with `context` prepended to the message, keeping its kind.
[[noreturn]] void rethrow_with_context(const Error& e, std::string_view context);

} // namespace phonoprobe

#endif
