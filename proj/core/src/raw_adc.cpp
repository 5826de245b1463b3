#include "leafeon/raw_adc.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <vector>

#include <fmt/format.h>

#include "leafeon/errors.hpp"

namespace leafeon::radar {
namespace {

static_assert(std::endian::native == std::endian::little,
              "raw ADC I/O assumes a little-endian host");

template <typename T>
void put(std::vector<char>& buf, std::size_t offset, T value) {
  std::memcpy(buf.data() + offset, &value, sizeof(T));
}

template <typename T>
T get(const char* buf, std::size_t offset) {
  T value;
  std::memcpy(&value, buf + offset, sizeof(T));
  return value;
}

std::vector<char> encode_header(const ChirpConfig& cfg, std::uint32_t frames) {
  std::vector<char> h(kRawHeaderBytes, 0);
  std::memcpy(h.data(), kRawMagic, 4);
  put(h, 4, kRawVersion);
  put(h, 8, cfg.digest());
  put(h, 16, cfg.n_chirps);
  put(h, 20, cfg.rx_count);
  put(h, 24, cfg.adc_samples);
  put(h, 28, frames);
  return h;
}

}  // namespace

RawAdcWriter::RawAdcWriter(const std::filesystem::path& path, const ChirpConfig& cfg)
    : out_(path, std::ios::binary | std::ios::trunc), cfg_(cfg) {
  if (!out_) throw Error(ErrorCode::IoError, fmt::format("cannot open {}", path.string()));
  const auto h = encode_header(cfg_, 0);
  out_.write(h.data(), static_cast<std::streamsize>(h.size()));
}

RawAdcWriter::~RawAdcWriter() {
  try {
    close();
  } catch (...) {
  }
}

void RawAdcWriter::write(const RadarFrame& frame, const RawFrameInfo& info) {
  if (frame.n_chirps != cfg_.n_chirps || frame.n_rx != cfg_.rx_count ||
      frame.n_samples != cfg_.adc_samples) {
    throw Error(ErrorCode::ConfigMismatch, "frame dimensions do not match the writer config");
  }
  std::vector<char> rec(kRawFrameHeaderBytes, 0);
  put(rec, 0, frames_);
  put(rec, 4, info.sample_index);
  put(rec, 8, info.steering_deg);
  put(rec, 16, info.distance_m);
  put(rec, 24, info.rwc);
  put(rec, 28, info.group);
  out_.write(rec.data(), static_cast<std::streamsize>(rec.size()));

  std::vector<std::int16_t> payload;
  payload.reserve(frame.cube.size() * 2);
  for (const cplx& v : frame.cube) {
    payload.push_back(to_adc_code(v.real()));
    payload.push_back(to_adc_code(v.imag()));
  }
  out_.write(reinterpret_cast<const char*>(payload.data()),
             static_cast<std::streamsize>(payload.size() * sizeof(std::int16_t)));
  if (!out_) throw Error(ErrorCode::IoError, "raw ADC write failed");
  ++frames_;
}

void RawAdcWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_.seekp(28);
  out_.write(reinterpret_cast<const char*>(&frames_), sizeof(frames_));
  out_.close();
  if (out_.fail()) throw Error(ErrorCode::IoError, "raw ADC close failed");
}

RawAdcReader::RawAdcReader(const std::filesystem::path& path, const ChirpConfig& cfg)
    : in_(path, std::ios::binary), cfg_(cfg) {
  if (!in_) throw Error(ErrorCode::IoError, fmt::format("cannot open {}", path.string()));
  std::array<char, kRawHeaderBytes> h{};
  in_.read(h.data(), h.size());
  if (in_.gcount() < 4 || std::memcmp(h.data(), kRawMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, fmt::format("{} is not an LFRD capture", path.string()));
  }
  if (in_.gcount() != static_cast<std::streamsize>(kRawHeaderBytes)) {
    throw Error(ErrorCode::TruncatedFrame, "capture header is truncated");
  }
  const auto version = get<std::uint32_t>(h.data(), 4);
  if (version != kRawVersion) {
    throw Error(ErrorCode::BadMagic, fmt::format("unsupported LFRD version {}", version));
  }
  const auto digest = get<std::uint64_t>(h.data(), 8);
  const auto chirps = get<std::uint32_t>(h.data(), 16);
  const auto rx = get<std::uint32_t>(h.data(), 20);
  const auto samples = get<std::uint32_t>(h.data(), 24);
  if (digest != cfg_.digest() || chirps != cfg_.n_chirps || rx != cfg_.rx_count ||
      samples != cfg_.adc_samples) {
    throw Error(ErrorCode::ConfigDigestMismatch,
                fmt::format("capture was recorded with a different chirp config "
                            "(digest {:016x}, {}x{}x{})",
                            digest, chirps, rx, samples));
  }
  frame_count_ = get<std::uint32_t>(h.data(), 28);
}

std::optional<std::pair<RawFrameInfo, RadarFrame>> RawAdcReader::next() {
  if (read_ >= frame_count_) return std::nullopt;
  const std::uint32_t index = read_;
  std::array<char, kRawFrameHeaderBytes> rec{};
  in_.read(rec.data(), rec.size());
  if (in_.gcount() != static_cast<std::streamsize>(rec.size())) {
    throw Error(ErrorCode::TruncatedFrame, fmt::format("frame {} header is truncated", index));
  }
  RawFrameInfo info;
  info.frame_index = get<std::uint32_t>(rec.data(), 0);
  info.sample_index = get<std::uint32_t>(rec.data(), 4);
  info.steering_deg = get<double>(rec.data(), 8);
  info.distance_m = get<double>(rec.data(), 16);
  info.rwc = get<float>(rec.data(), 24);
  info.group = get<std::uint32_t>(rec.data(), 28);

  RadarFrame frame;
  frame.n_chirps = cfg_.n_chirps;
  frame.n_rx = cfg_.rx_count;
  frame.n_samples = cfg_.adc_samples;
  frame.steering_deg = info.steering_deg;
  const std::size_t count = frame.n_chirps * frame.n_rx * frame.n_samples;
  std::vector<std::int16_t> payload(count * 2);
  const auto bytes = static_cast<std::streamsize>(payload.size() * sizeof(std::int16_t));
  in_.read(reinterpret_cast<char*>(payload.data()), bytes);
  if (in_.gcount() != bytes) {
    throw Error(ErrorCode::TruncatedFrame, fmt::format("frame {} payload is truncated", index));
  }
  frame.cube.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    frame.cube[k] = {static_cast<double>(payload[2 * k]) / kAdcFullScaleCode,
                     static_cast<double>(payload[2 * k + 1]) / kAdcFullScaleCode};
  }
  ++read_;
  return std::make_pair(info, std::move(frame));
}

}  // namespace leafeon::radar
