#pragma once

#include <stdexcept>
#include <string>

namespace armatch {

enum class ErrorKind {
  InvalidParameter,
  Parse,
  Io,
  DegenerateRegion,
  DegeneratePose,
  DescriptorUnavailable,
  ClassificationFailed,
  EstimationFailed,
  Configuration,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to an exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::InvalidParameter, message);
}

}  // namespace armatch
