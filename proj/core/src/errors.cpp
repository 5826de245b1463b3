#include "leafeon/errors.hpp"

namespace leafeon {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::TotalInternalReflection: return "TotalInternalReflection";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::EdgeBin: return "EdgeBin";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::InsufficientSnapshots: return "InsufficientSnapshots";
    case ErrorCode::InvalidWeight: return "InvalidWeight";
    case ErrorCode::MissingAngle: return "MissingAngle";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::ConfigDigestMismatch: return "ConfigDigestMismatch";
    case ErrorCode::TruncatedFrame: return "TruncatedFrame";
    case ErrorCode::EmptyInput: return "EmptyInput";
  }
  return "Unknown";
}

}  // namespace leafeon
