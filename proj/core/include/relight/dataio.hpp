#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "relight/scene.hpp"

namespace relight::data {

/// 8-bit binary PPM (P6) for RGB, quantized round-to-nearest.
void write_ppm(const std::filesystem::path& path, const RgbImage& img);
RgbImage read_ppm(const std::filesystem::path& path);

/// 16-bit binary PGM (P5, big-endian per Netpbm) for depth rasters.
/// Stored value = round(depth / scale), saturating; `sentinel` marks sky.
void write_depth_pgm(const std::filesystem::path& path, const std::vector<double>& depth,
                     int height, int width, double scale);
std::vector<double> read_depth_pgm(const std::filesystem::path& path, int* height,
                                   int* width, double scale);

/// 8-bit binary PGM (P5) of palette indices for semantic maps.
void write_semseg_pgm(const std::filesystem::path& path, const std::vector<uint8_t>& classes,
                      int height, int width);
std::vector<uint8_t> read_semseg_pgm(const std::filesystem::path& path, int* height,
                                     int* width);

struct ManifestEntry {
  std::string id;
  std::string scene_id;
  std::string split;  // "train" or "test"
  std::string rgb_path;
  std::string depth_path;
  std::string semseg_path;
  double azimuth_deg = 0.0;
  double zenith_deg = 0.0;
};

/// Dataset index: palette, raster metadata and one record per tuple. Paths
/// are stored relative to the manifest file.
struct Manifest {
  static constexpr int kVersion = 1;
  std::map<uint8_t, std::string> palette;  // class id -> name
  double depth_scale = 0.001;              // meters per stored unit
  uint16_t depth_sentinel = 65535;         // stored value marking sky
  int height = 0;
  int width = 0;
  std::vector<ManifestEntry> entries;

  /// Directory the manifest was loaded from / will be written to; used to
  /// resolve entry paths. Not serialized.
  std::filesystem::path base_dir;
};

void write_manifest(const std::filesystem::path& path, const Manifest& m);

/// Parses and validates a manifest. Unknown format version and missing
/// raster files are reported with the offending entry named.
Manifest read_manifest(const std::filesystem::path& path);

/// Loads one tuple: RGB decoded to [0,1], depth scaled to meters with the
/// sentinel mapped to scene::kDepthSentinel semantics, semseg validated
/// against the palette. Dimension disagreements across the three rasters are
/// rejected.
scene::RenderedTuple load_tuple(const Manifest& m, const ManifestEntry& entry);

}  // namespace relight::data
