#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace leafeon {

enum class ErrorCode {
  TotalInternalReflection,
  OutOfRange,
  ConfigMismatch,
  EdgeBin,
  SingularCovariance,
  InsufficientSnapshots,
  InvalidWeight,
  MissingAngle,
  TooFewSamples,
  ShapeMismatch,
  Diverged,
  IoError,
  ConfigError,
  BadMagic,
  ConfigDigestMismatch,
  TruncatedFrame,
  EmptyInput,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace leafeon
