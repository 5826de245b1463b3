#pragma once

#include <filesystem>
#include <optional>

#include "leafeon/features.hpp"
#include "leafeon/lmnet.hpp"
#include "leafeon/train.hpp"

namespace leafeon::lmnet {

// Model checkpoint ("LFNN"), little-endian:
//   char[4] "LFNN", u32 version (1), u32 iota, u32 kappa, u32 variant,
//   u32 layer-width count W, u32[W] widths (location stack, rss stack,
//   gate hidden, fused width), u32 parameter count P, u32 buffer count R,
//   u32 flags (1: scaler, 2: optimizer state),
//   f32[P] parameters, f32[R] batch-norm running statistics,
//   [scaler]    u32 width F, f64[F] mean, f64[F] stddev, u8[F] degenerate,
//               u8 has target transform, f64 lambda, f64 mean, f64 stddev
//   [optimizer] u64 step, f32[P] first moment, f32[P] second moment
inline constexpr char kCheckpointMagic[4] = {'L', 'F', 'N', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  LmNet net;
  std::optional<features::Scaler> scaler;
  std::optional<AdamState> optimizer;
};

void write_checkpoint(const std::filesystem::path& path, const LmNet& net,
                      const features::Scaler* scaler = nullptr,
                      const AdamState* optimizer = nullptr);

/// BadMagic on a foreign file; ShapeMismatch when the layer record does not
/// match this build's architecture; IoError on truncation.
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace leafeon::lmnet
