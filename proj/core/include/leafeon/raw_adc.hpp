#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>

#include "leafeon/radar.hpp"

namespace leafeon::radar {

// Raw ADC capture container ("LFRD").
//
// File header, 64 bytes, little-endian:
//   0  char[4]  magic "LFRD"
//   4  u32      version (1)
//   8  u64      ChirpConfig digest
//   16 u32      n_chirps
//   20 u32      n_rx
//   24 u32      adc_samples
//   28 u32      frame count
//   32 u8[32]   reserved, zero
// Each frame is a 32-byte record header followed by the payload:
//   0  u32      frame index
//   4  u32      sample index (frames of one capture share it)
//   8  f64      Tx steering angle, deg
//   16 f64      distance hint d_t, m
//   24 f32      RWC label, percent (NaN when unknown)
//   28 u32      group label
//   32 i16[n_chirps][n_rx][adc_samples][2]  interleaved I, Q
inline constexpr char kRawMagic[4] = {'L', 'F', 'R', 'D'};
inline constexpr std::uint32_t kRawVersion = 1;
inline constexpr std::size_t kRawHeaderBytes = 64;
inline constexpr std::size_t kRawFrameHeaderBytes = 32;

struct RawFrameInfo {
  std::uint32_t frame_index = 0;
  std::uint32_t sample_index = 0;
  double steering_deg = 0.0;
  double distance_m = 0.0;
  float rwc = 0.0F;
  std::uint32_t group = 0;
};

class RawAdcWriter {
 public:
  RawAdcWriter(const std::filesystem::path& path, const ChirpConfig& cfg);
  ~RawAdcWriter();
  RawAdcWriter(const RawAdcWriter&) = delete;
  RawAdcWriter& operator=(const RawAdcWriter&) = delete;

  void write(const RadarFrame& frame, const RawFrameInfo& info);
  /// Patches the frame count into the header and closes the file.
  void close();

 private:
  std::ofstream out_;
  ChirpConfig cfg_;
  std::uint32_t frames_ = 0;
  bool closed_ = false;
};

class RawAdcReader {
 public:
  /// Opens and validates the header against `cfg`: BadMagic on a foreign
  /// file, ConfigDigestMismatch when the digest or any dimension differs.
  RawAdcReader(const std::filesystem::path& path, const ChirpConfig& cfg);

  std::uint32_t frame_count() const { return frame_count_; }
  /// Next frame, or nullopt at the end. Throws TruncatedFrame (with the frame
  /// index) if the file ends inside a frame.
  std::optional<std::pair<RawFrameInfo, RadarFrame>> next();

 private:
  std::ifstream in_;
  ChirpConfig cfg_;
  std::uint32_t frame_count_ = 0;
  std::uint32_t read_ = 0;
};

}  // namespace leafeon::radar
