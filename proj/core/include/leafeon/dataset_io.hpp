#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "leafeon/features.hpp"

namespace leafeon::features {

// Dataset container ("LFDS"), little-endian:
//   0  char[4]  magic "LFDS"
//   4  u32      version (1)
//   8  u32      iota
//   12 u32      kappa
//   16 u32      sample count
//   20 u32      leaf type (0 Avocado, 1 Rubra, 2 BullBay)
//   24 u32      manifest length M
//   28 char[M]  manifest JSON (UTF-8)
// then per sample:
//   u32 group, f32 rwc, f32 distance,
//   f32[iota][5] location, f32[iota][kappa][3] rss
inline constexpr char kDatasetMagic[4] = {'L', 'F', 'D', 'S'};
inline constexpr std::uint32_t kDatasetVersion = 1;

nlohmann::json manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);

void write_dataset(const std::filesystem::path& path, const Dataset& ds);
/// BadMagic on a foreign file, IoError on truncation or a version mismatch.
Dataset read_dataset(const std::filesystem::path& path);

/// Pretty-printed manifest next to the binary, for inspection.
void write_manifest_json(const std::filesystem::path& path, const DatasetManifest& m);

/// One row per sample: group, distance, rwc, loc_*, rss_* columns.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& ds);

}  // namespace leafeon::features
