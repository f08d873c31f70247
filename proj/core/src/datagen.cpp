#include "relight/datagen.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "relight/parallel.hpp"
#include "relight/rng.hpp"

namespace relight::scene {

namespace {

std::string scene_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene%04d", index);
  return buf;
}

std::string position_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "p%02d", index);
  return buf;
}

}  // namespace

data::Manifest generate_dataset(const DatasetConfig& cfg,
                                const std::filesystem::path& out_dir) {
  const std::vector<solar::SunPosition>& positions =
      cfg.positions.empty() ? solar::default_positions() : cfg.positions;
  if (positions.empty()) throw ValidationError("no sun positions given");
  for (const auto& p : positions) {
    solar::validate(p);
    if (!solar::above_horizon(p)) {
      throw ValidationError("dataset sun positions must be above the horizon");
    }
  }
  if (cfg.scenes < 1) throw ValidationError("scene count must be >= 1");
  if (cfg.test_fraction < 0.0 || cfg.test_fraction >= 1.0) {
    throw ValidationError("test fraction outside [0,1)");
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir.string());

  // Whole-scene split: a seeded shuffle, last chunk held out.
  std::vector<int> order(cfg.scenes);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(split_seed(cfg.seed, 0x5911f));
  for (int i = cfg.scenes - 1; i > 0; --i) {
    std::swap(order[i], order[split_rng.index(static_cast<uint64_t>(i) + 1)]);
  }
  const int n_test = static_cast<int>(std::lround(cfg.scenes * cfg.test_fraction));
  std::vector<bool> is_test(cfg.scenes, false);
  for (int i = cfg.scenes - n_test; i < cfg.scenes; ++i) is_test[order[i]] = true;

  data::Manifest manifest;
  for (uint8_t c = 0; c < kNumClasses; ++c) manifest.palette[c] = class_name(c);
  manifest.height = cfg.height;
  manifest.width = cfg.width;
  manifest.base_dir = out_dir;

  struct Job {
    int scene_idx;
    int pos_idx;
  };
  std::vector<Job> jobs;
  jobs.reserve(static_cast<size_t>(cfg.scenes) * positions.size());
  for (int s = 0; s < cfg.scenes; ++s) {
    for (size_t p = 0; p < positions.size(); ++p) {
      jobs.push_back({s, static_cast<int>(p)});
    }
  }

  for (int s = 0; s < cfg.scenes; ++s) {
    std::filesystem::create_directories(out_dir / scene_name(s), ec);
    if (ec) throw IoError("cannot create scene directory");
  }

  parallel_for(static_cast<int64_t>(jobs.size()), cfg.threads, [&](int64_t j) {
    const Job& job = jobs[j];
    const SceneSpec spec = make_random_scene(split_seed(cfg.seed, job.scene_idx));
    LightSpec light;
    light.sun = positions[job.pos_idx];
    light.ambient = cfg.ambient;
    light.sun_intensity = cfg.sun_intensity;
    const RenderedTuple tuple = render(spec, light, cfg.height, cfg.width);

    const std::filesystem::path scene_dir = out_dir / scene_name(job.scene_idx);
    data::write_ppm(scene_dir / (position_name(job.pos_idx) + "_rgb.ppm"), tuple.rgb);
    if (job.pos_idx == 0) {  // geometry is light-invariant; write once
      data::write_depth_pgm(scene_dir / "depth.pgm", tuple.depth, cfg.height, cfg.width,
                            manifest.depth_scale);
      data::write_semseg_pgm(scene_dir / "semseg.pgm", tuple.semseg, cfg.height, cfg.width);
    }
  });

  for (const Job& job : jobs) {
    data::ManifestEntry e;
    e.scene_id = scene_name(job.scene_idx);
    e.id = e.scene_id + "_" + position_name(job.pos_idx);
    e.split = is_test[job.scene_idx] ? "test" : "train";
    e.rgb_path = e.scene_id + "/" + position_name(job.pos_idx) + "_rgb.ppm";
    e.depth_path = e.scene_id + "/depth.pgm";
    e.semseg_path = e.scene_id + "/semseg.pgm";
    e.azimuth_deg = positions[job.pos_idx].azimuth_deg;
    e.zenith_deg = positions[job.pos_idx].zenith_deg;
    manifest.entries.push_back(std::move(e));
  }

  data::write_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace relight::scene
