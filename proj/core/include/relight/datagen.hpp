#pragma once

#include <filesystem>

#include "relight/dataio.hpp"
#include "relight/scene.hpp"

namespace relight::scene {

struct DatasetConfig {
  int scenes = 150;
  std::vector<solar::SunPosition> positions;  // empty -> solar::default_positions()
  int height = 64;
  int width = 64;
  uint64_t seed = 0;
  double test_fraction = 0.1;  // whole scenes held out
  double ambient = 0.25;
  double sun_intensity = 0.75;
  int threads = 1;
};

/// Renders scenes x positions tuples into `out_dir` and writes manifest.json
/// there. Geometry (depth/semseg) is shared across the positions of a scene,
/// so those rasters are written once per scene. Same config -> byte-identical
/// output tree.
data::Manifest generate_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace relight::scene
