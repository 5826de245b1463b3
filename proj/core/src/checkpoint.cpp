#include "leafeon/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "leafeon/errors.hpp"

namespace leafeon::lmnet {
namespace {

static_assert(std::endian::native == std::endian::little, "LFNN I/O assumes a little-endian host");

constexpr std::uint32_t kHasScaler = 1;
constexpr std::uint32_t kHasOptimizer = 2;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw Error(ErrorCode::IoError, "checkpoint ends early");
  }
  return v;
}

void put_f32(std::ostream& out, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put<float>(out, static_cast<float>(v[i]));
}

void get_f32(std::istream& in, Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = get<float>(in);
}

std::vector<std::uint32_t> layer_record(const Dims& dims) {
  std::vector<std::uint32_t> w;
  for (std::size_t x : kLocationWidths) w.push_back(static_cast<std::uint32_t>(x));
  w.push_back(static_cast<std::uint32_t>(dims.rss_width()));
  for (std::size_t x : kRssHidden) w.push_back(static_cast<std::uint32_t>(x));
  w.push_back(static_cast<std::uint32_t>(kGateHidden));
  w.push_back(static_cast<std::uint32_t>(kFeatureWidth));
  return w;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const LmNet& net,
                      const features::Scaler* scaler, const AdamState* optimizer) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", path.string()));
  out.write(kCheckpointMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.dims().iota));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.dims().kappa));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.variant()));
  const std::vector<std::uint32_t> widths = layer_record(net.dims());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(widths.size()));
  for (std::uint32_t w : widths) put(out, w);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.params().size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.buffers().size()));
  const bool with_optimizer = optimizer && optimizer->m.size() == net.params().size();
  put<std::uint32_t>(out, (scaler ? kHasScaler : 0U) | (with_optimizer ? kHasOptimizer : 0U));
  put_f32(out, net.params());
  put_f32(out, net.buffers());
  if (scaler) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(scaler->mean.size()));
    for (double v : scaler->mean) put(out, v);
    for (double v : scaler->stddev) put(out, v);
    for (bool d : scaler->degenerate) put<std::uint8_t>(out, d ? 1 : 0);
    put<std::uint8_t>(out, scaler->target ? 1 : 0);
    const features::PowerTransform t = scaler->target.value_or(features::PowerTransform{});
    put(out, t.lambda);
    put(out, t.mean);
    put(out, t.stddev);
  }
  if (with_optimizer) {
    put<std::uint64_t>(out, optimizer->t);
    put_f32(out, optimizer->m);
    put_f32(out, optimizer->v);
  }
  if (!out) throw Error(ErrorCode::IoError, fmt::format("write to {} failed", path.string()));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open {}", path.string()));
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, fmt::format("{} is not an LFNN checkpoint", path.string()));
  }
  if (const auto v = get<std::uint32_t>(in); v != kCheckpointVersion) {
    throw Error(ErrorCode::IoError, fmt::format("unsupported LFNN version {}", v));
  }
  Dims dims;
  dims.iota = get<std::uint32_t>(in);
  dims.kappa = get<std::uint32_t>(in);
  const auto variant = get<std::uint32_t>(in);
  if (variant > static_cast<std::uint32_t>(Variant::Full)) {
    throw Error(ErrorCode::IoError, fmt::format("unknown variant tag {}", variant));
  }
  std::vector<std::uint32_t> widths(get<std::uint32_t>(in));
  for (std::uint32_t& w : widths) w = get<std::uint32_t>(in);
  if (widths != layer_record(dims)) {
    throw Error(ErrorCode::ShapeMismatch, "checkpoint layer widths differ from this build");
  }
  Checkpoint ck{LmNet(dims, static_cast<Variant>(variant), 0), std::nullopt, std::nullopt};
  const auto n_params = get<std::uint32_t>(in);
  const auto n_buffers = get<std::uint32_t>(in);
  if (n_params != ck.net.params().size() || n_buffers != ck.net.buffers().size()) {
    throw Error(ErrorCode::ShapeMismatch, "checkpoint parameter count differs from this build");
  }
  const auto flags = get<std::uint32_t>(in);
  get_f32(in, ck.net.params());
  get_f32(in, ck.net.buffers());
  if (flags & kHasScaler) {
    features::Scaler s;
    const auto width = get<std::uint32_t>(in);
    s.mean.resize(width);
    s.stddev.resize(width);
    s.degenerate.resize(width);
    for (double& v : s.mean) v = get<double>(in);
    for (double& v : s.stddev) v = get<double>(in);
    for (std::size_t i = 0; i < width; ++i) s.degenerate[i] = get<std::uint8_t>(in) != 0;
    const bool has_target = get<std::uint8_t>(in) != 0;
    features::PowerTransform t;
    t.lambda = get<double>(in);
    t.mean = get<double>(in);
    t.stddev = get<double>(in);
    if (has_target) s.target = t;
    ck.scaler = std::move(s);
  }
  if (flags & kHasOptimizer) {
    AdamState st = AdamState::zeros(ck.net.params().size());
    st.t = get<std::uint64_t>(in);
    get_f32(in, st.m);
    get_f32(in, st.v);
    ck.optimizer = std::move(st);
  }
  return ck;
}

}  // namespace leafeon::lmnet
