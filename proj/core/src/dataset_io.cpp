#include "leafeon/dataset_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "leafeon/errors.hpp"

namespace leafeon::features {
namespace {

static_assert(std::endian::native == std::endian::little, "LFDS I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw Error(ErrorCode::IoError, fmt::format("{}: unexpected end of file", path.string()));
  }
  return v;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", path.string()));
  return out;
}

}  // namespace

nlohmann::json manifest_to_json(const DatasetManifest& m) {
  return {{"samples", m.samples},
          {"leaf_type", to_string(m.leaf_type)},
          {"rwc_levels", m.rwc_levels},
          {"placements_per_level", m.placements_per_level},
          {"distances", m.distances},
          {"steering_angles", m.steering_angles},
          {"iota", m.iota},
          {"kappa", m.kappa},
          {"seed", m.seed}};
}

DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    m.samples = j.at("samples").get<std::size_t>();
    m.leaf_type = leaf_type_from_string(j.at("leaf_type").get<std::string>());
    m.rwc_levels = j.at("rwc_levels").get<std::vector<double>>();
    m.placements_per_level = j.at("placements_per_level").get<std::size_t>();
    m.distances = j.at("distances").get<std::vector<double>>();
    m.steering_angles = j.at("steering_angles").get<std::vector<double>>();
    m.iota = j.at("iota").get<std::size_t>();
    m.kappa = j.at("kappa").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, fmt::format("malformed dataset manifest: {}", e.what()));
  }
  return m;
}

void write_dataset(const std::filesystem::path& path, const Dataset& ds) {
  ds.validate();
  const DatasetManifest& m = ds.manifest;
  const std::string manifest = manifest_to_json(m).dump();
  std::ofstream out = open_out(path, std::ios::binary | std::ios::trunc);
  out.write(kDatasetMagic, 4);
  put<std::uint32_t>(out, kDatasetVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.iota));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.kappa));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.samples.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.leaf_type));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(manifest.size()));
  out.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
  for (const FeatureSample& s : ds.samples) {
    put<std::uint32_t>(out, s.group);
    put<float>(out, static_cast<float>(s.rwc));
    put<float>(out, static_cast<float>(s.distance));
    for (double v : s.location) put<float>(out, static_cast<float>(v));
    for (double v : s.rss) put<float>(out, static_cast<float>(v));
  }
  if (!out) throw Error(ErrorCode::IoError, fmt::format("write to {} failed", path.string()));
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open {}", path.string()));
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kDatasetMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, fmt::format("{} is not an LFDS dataset", path.string()));
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kDatasetVersion) {
    throw Error(ErrorCode::IoError, fmt::format("unsupported LFDS version {}", version));
  }
  const auto iota = get<std::uint32_t>(in, path);
  const auto kappa = get<std::uint32_t>(in, path);
  const auto count = get<std::uint32_t>(in, path);
  const auto leaf = get<std::uint32_t>(in, path);
  const auto manifest_len = get<std::uint32_t>(in, path);
  std::string manifest(manifest_len, '\0');
  if (!in.read(manifest.data(), manifest_len)) {
    throw Error(ErrorCode::IoError, fmt::format("{}: truncated manifest", path.string()));
  }
  Dataset ds;
  try {
    ds.manifest = manifest_from_json(nlohmann::json::parse(manifest));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::IoError, fmt::format("manifest is not JSON: {}", e.what()));
  }
  if (ds.manifest.iota != iota || ds.manifest.kappa != kappa || ds.manifest.samples != count ||
      static_cast<std::uint32_t>(ds.manifest.leaf_type) != leaf) {
    throw Error(ErrorCode::ShapeMismatch, "LFDS header disagrees with its manifest");
  }
  ds.samples.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    FeatureSample s;
    s.iota = iota;
    s.kappa = kappa;
    s.group = get<std::uint32_t>(in, path);
    s.rwc = get<float>(in, path);
    s.distance = get<float>(in, path);
    s.location.resize(std::size_t{iota} * kLocationWidth);
    s.rss.resize(std::size_t{iota} * kappa * kZoneBins);
    for (double& v : s.location) v = get<float>(in, path);
    for (double& v : s.rss) v = get<float>(in, path);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void write_manifest_json(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream out = open_out(path, std::ios::trunc);
  out << manifest_to_json(m).dump(2) << '\n';
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out = open_out(path, std::ios::trunc);
  const std::size_t iota = ds.manifest.iota;
  const std::size_t kappa = ds.manifest.kappa;
  static constexpr const char* kLocationNames[kLocationWidth] = {"eta", "aoa_prev", "aoa",
                                                                 "aoa_next", "range"};
  out << "group,distance,rwc";
  for (std::size_t i = 0; i < iota; ++i) {
    for (const char* name : kLocationNames) out << fmt::format(",loc{}_{}", i, name);
  }
  for (std::size_t i = 0; i < iota; ++i) {
    for (std::size_t r = 0; r < kappa; ++r) {
      for (std::size_t z = 0; z < kZoneBins; ++z) out << fmt::format(",rss{}_rx{}_b{}", i, r, z);
    }
  }
  out << '\n';
  for (const FeatureSample& s : ds.samples) {
    out << fmt::format("{},{},{}", s.group, s.distance, s.rwc);
    for (double v : s.location) out << fmt::format(",{}", v);
    for (double v : s.rss) out << fmt::format(",{}", v);
    out << '\n';
  }
}

}  // namespace leafeon::features
