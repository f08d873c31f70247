#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "relight/datagen.hpp"
#include "relight/dataio.hpp"
#include "relight/rng.hpp"

using namespace relight;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("relight_test_" + std::to_string(Rng(std::random_device{}()).bits()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("ppm round-trips within 8-bit quantization") {
  TempDir tmp;
  Rng rng(1);
  RgbImage img(5, 7);
  for (double& v : img.data) v = rng.uniform();
  data::write_ppm(tmp.path / "img.ppm", img);
  const RgbImage back = data::read_ppm(tmp.path / "img.ppm");
  REQUIRE(back.height == 5);
  REQUIRE(back.width == 7);
  for (size_t i = 0; i < img.data.size(); ++i) {
    CHECK(std::abs(img.data[i] - back.data[i]) <= 0.5 / 255.0 + 1e-12);
  }
}

TEST_CASE("depth pgm quantization error is bounded by scale/2") {
  TempDir tmp;
  Rng rng(2);
  const double scale = 0.001;
  std::vector<double> depth(6 * 4);
  for (double& d : depth) d = rng.range(0.0, 60.0);
  data::write_depth_pgm(tmp.path / "d.pgm", depth, 6, 4, scale);
  int h = 0, w = 0;
  const auto back = data::read_depth_pgm(tmp.path / "d.pgm", &h, &w, scale);
  REQUIRE(h == 6);
  REQUIRE(w == 4);
  for (size_t i = 0; i < depth.size(); ++i) {
    CHECK(std::abs(depth[i] - back[i]) <= scale / 2 + 1e-12);
  }
}

TEST_CASE("semseg pgm is lossless") {
  TempDir tmp;
  std::vector<uint8_t> classes = {0, 1, 2, 3, 3, 2, 1, 0, 1, 1, 2, 0};
  data::write_semseg_pgm(tmp.path / "s.pgm", classes, 3, 4);
  int h = 0, w = 0;
  CHECK(data::read_semseg_pgm(tmp.path / "s.pgm", &h, &w) == classes);
}

TEST_CASE("manifest round-trips losslessly") {
  TempDir tmp;
  scene::DatasetConfig cfg;
  cfg.scenes = 2;
  cfg.height = 16;
  cfg.width = 16;
  cfg.seed = 5;
  cfg.test_fraction = 0.5;
  const data::Manifest m = scene::generate_dataset(cfg, tmp.path);

  const data::Manifest back = data::read_manifest(tmp.path / "manifest.json");
  CHECK(back.palette == m.palette);
  CHECK(back.depth_scale == m.depth_scale);
  CHECK(back.height == m.height);
  REQUIRE(back.entries.size() == m.entries.size());
  for (size_t i = 0; i < m.entries.size(); ++i) {
    CHECK(back.entries[i].id == m.entries[i].id);
    CHECK(back.entries[i].split == m.entries[i].split);
    CHECK(back.entries[i].azimuth_deg == m.entries[i].azimuth_deg);
    CHECK(back.entries[i].zenith_deg == m.entries[i].zenith_deg);
  }
}

TEST_CASE("unknown manifest version is a versioned error") {
  TempDir tmp;
  std::ofstream(tmp.path / "manifest.json")
      << R"({"format":"relight-dataset","version":99,"palette":[],"depth_scale":0.001,)"
      << R"("depth_sentinel":65535,"height":16,"width":16,"entries":[]})";
  CHECK_THROWS_WITH_AS(data::read_manifest(tmp.path / "manifest.json"),
                       doctest::Contains("version 99"), IoError);
}

TEST_CASE("missing raster files name the offending entry") {
  TempDir tmp;
  scene::DatasetConfig cfg;
  cfg.scenes = 1;
  cfg.height = 16;
  cfg.width = 16;
  cfg.test_fraction = 0.0;
  scene::generate_dataset(cfg, tmp.path);
  fs::remove(tmp.path / "scene0000" / "p03_rgb.ppm");
  CHECK_THROWS_WITH_AS(data::read_manifest(tmp.path / "manifest.json"),
                       doctest::Contains("scene0000_p03"), IoError);
}

TEST_CASE("tuples round-trip through the raster formats") {
  TempDir tmp;
  scene::DatasetConfig cfg;
  cfg.scenes = 1;
  cfg.height = 24;
  cfg.width = 24;
  cfg.seed = 9;
  cfg.test_fraction = 0.0;
  const data::Manifest m = scene::generate_dataset(cfg, tmp.path);

  const auto spec = scene::make_random_scene(split_seed(cfg.seed, 0));
  scene::LightSpec light;
  light.sun = solar::default_positions()[0];
  light.ambient = cfg.ambient;
  light.sun_intensity = cfg.sun_intensity;
  const auto rendered = scene::render(spec, light, 24, 24);

  const auto loaded = data::load_tuple(m, m.entries[0]);
  CHECK(loaded.semseg == rendered.semseg);
  for (size_t i = 0; i < rendered.depth.size(); ++i) {
    CHECK(std::abs(loaded.depth[i] - rendered.depth[i]) <= m.depth_scale / 2 + 1e-12);
  }
  for (size_t i = 0; i < rendered.rgb.data.size(); ++i) {
    CHECK(std::abs(loaded.rgb.data[i] - rendered.rgb.data[i]) <= 0.5 / 255.0 + 1e-12);
  }
  CHECK(loaded.sun.azimuth_deg == m.entries[0].azimuth_deg);
}

TEST_CASE("palette mismatches are rejected at load") {
  TempDir tmp;
  scene::DatasetConfig cfg;
  cfg.scenes = 1;
  cfg.height = 16;
  cfg.width = 16;
  cfg.test_fraction = 0.0;
  data::Manifest m = scene::generate_dataset(cfg, tmp.path);
  m.palette.erase(scene::kSky);  // every scene has sky pixels
  CHECK_THROWS_WITH_AS(data::load_tuple(m, m.entries[0]), doctest::Contains("class id"),
                       IoError);
}

TEST_CASE("an externally declared palette loads non-default class ids") {
  TempDir tmp;
  // A 5-class tuple produced by an external labeler.
  const int h = 16, w = 16;
  RgbImage rgb(h, w);
  std::vector<double> depth(h * w, 10.0);
  std::vector<uint8_t> semseg(h * w, 4);  // the extra class
  data::write_ppm(tmp.path / "rgb.ppm", rgb);
  data::write_depth_pgm(tmp.path / "depth.pgm", depth, h, w, 0.001);
  data::write_semseg_pgm(tmp.path / "semseg.pgm", semseg, h, w);

  data::Manifest m;
  for (uint8_t c = 0; c < 5; ++c) m.palette[c] = "class" + std::to_string(c);
  m.height = h;
  m.width = w;
  m.base_dir = tmp.path;
  data::ManifestEntry e;
  e.id = "ext0";
  e.scene_id = "ext";
  e.split = "train";
  e.rgb_path = "rgb.ppm";
  e.depth_path = "depth.pgm";
  e.semseg_path = "semseg.pgm";
  e.azimuth_deg = 10;
  e.zenith_deg = 40;
  m.entries.push_back(e);

  const auto t = data::load_tuple(m, m.entries[0]);
  CHECK(t.semseg[0] == 4);

  m.palette.erase(4);
  CHECK_THROWS_AS(data::load_tuple(m, m.entries[0]), IoError);
}

TEST_CASE("raster dimension disagreements are rejected") {
  TempDir tmp;
  RgbImage rgb(8, 8);
  std::vector<double> depth(16 * 16, 1.0);
  std::vector<uint8_t> semseg(8 * 8, 0);
  data::write_ppm(tmp.path / "rgb.ppm", rgb);
  data::write_depth_pgm(tmp.path / "depth.pgm", depth, 16, 16, 0.001);
  data::write_semseg_pgm(tmp.path / "semseg.pgm", semseg, 8, 8);

  data::Manifest m;
  m.palette[0] = "ground";
  m.base_dir = tmp.path;
  data::ManifestEntry e;
  e.id = "bad";
  e.scene_id = "bad";
  e.split = "train";
  e.rgb_path = "rgb.ppm";
  e.depth_path = "depth.pgm";
  e.semseg_path = "semseg.pgm";
  m.entries.push_back(e);
  CHECK_THROWS_WITH_AS(data::load_tuple(m, m.entries[0]), doctest::Contains("disagree"),
                       IoError);
}

TEST_CASE("generation is deterministic: same seed, byte-identical tree") {
  TempDir a, b, c;
  scene::DatasetConfig cfg;
  cfg.scenes = 2;
  cfg.height = 16;
  cfg.width = 16;
  cfg.seed = 77;
  scene::generate_dataset(cfg, a.path);
  scene::generate_dataset(cfg, b.path);
  cfg.seed = 78;
  scene::generate_dataset(cfg, c.path);

  bool differs_somewhere = false;
  for (const auto& entry : fs::recursive_directory_iterator(a.path)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a.path);
    CHECK(slurp(entry.path()) == slurp(b.path / rel));
    if (slurp(entry.path()) != slurp(c.path / rel)) differs_somewhere = true;
  }
  CHECK(differs_somewhere);
}

TEST_CASE("datasets share geometry files across positions of a scene") {
  TempDir tmp;
  scene::DatasetConfig cfg;
  cfg.scenes = 1;
  cfg.height = 16;
  cfg.width = 16;
  const data::Manifest m = scene::generate_dataset(cfg, tmp.path);
  REQUIRE(m.entries.size() == 9);
  for (const auto& e : m.entries) {
    CHECK(e.depth_path == m.entries[0].depth_path);
    CHECK(e.semseg_path == m.entries[0].semseg_path);
  }
}

TEST_CASE("split is by whole scenes and reproducible from the manifest") {
  TempDir tmp;
  scene::DatasetConfig cfg;
  cfg.scenes = 10;
  cfg.height = 16;
  cfg.width = 16;
  cfg.seed = 3;
  cfg.test_fraction = 0.2;
  const data::Manifest m = scene::generate_dataset(cfg, tmp.path);

  std::map<std::string, std::set<std::string>> splits;
  for (const auto& e : m.entries) splits[e.scene_id].insert(e.split);
  int test_scenes = 0;
  for (const auto& [sc, ss] : splits) {
    CHECK(ss.size() == 1);  // a scene never straddles the split
    test_scenes += ss.count("test");
  }
  CHECK(test_scenes == 2);
}
