#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "relight/oracles.hpp"
#include "relight/rng.hpp"
#include "relight/scene.hpp"

using namespace relight;

TEST_CASE("sun_direction unit cases") {
  const auto up = scene::sun_direction({123.0, 0.0});
  CHECK(up[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(up[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(up[2] == doctest::Approx(1.0));

  const auto fwd = scene::sun_direction({0.0, 90.0});
  CHECK(fwd[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fwd[1] == doctest::Approx(1.0));
  CHECK(std::abs(fwd[2]) < 1e-12);

  const auto diag = scene::sun_direction({90.0, 45.0});
  CHECK(diag[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(std::abs(diag[1]) < 1e-12);
  CHECK(diag[2] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(diag[0] * diag[0] + diag[1] * diag[1] + diag[2] * diag[2] == doctest::Approx(1.0));
}

namespace {

scene::SceneSpec flat_gray_scene() {
  scene::SceneSpec spec;
  spec.ground.albedo = {0.5, 0.5, 0.5};
  spec.ground.checker_contrast = 0.0;
  scene::Box far_box;
  far_box.center = {100.0, 100.0, 0.5};
  far_box.size = {1, 1, 1};
  spec.objects.push_back(far_box);
  return spec;
}

}  // namespace

TEST_CASE("open ground under an overhead sun matches the shading equation") {
  scene::LightSpec light;
  light.sun = {0.0, 0.0};
  light.ambient = 0.2;
  light.sun_intensity = 0.8;
  const auto tuple = scene::render(flat_gray_scene(), light, 32, 32);
  // 0.5 * (0.2 + 0.8 * 1.0) with a neutral overhead sun color.
  CHECK(tuple.rgb.at(30, 16, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(tuple.rgb.at(30, 16, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("shadowed ground keeps only the ambient term") {
  scene::SceneSpec spec = flat_gray_scene();
  scene::Box box;
  box.center = {0.0, 2.0, 1.0};
  box.size = {2.0, 2.0, 2.0};
  spec.objects.push_back(box);
  scene::LightSpec light;
  light.sun = {0.0, 60.0};  // from the north, so the shadow falls toward the camera
  light.ambient = 0.2;
  light.sun_intensity = 0.8;
  const auto dbg = scene::render_debug(spec, light, 64, 64);

  const auto suncol = scene::sun_color(light);
  bool found = false;
  for (int y = 0; y < 64 && !found; ++y) {
    for (int x = 0; x < 64 && !found; ++x) {
      const size_t i = static_cast<size_t>(y) * 64 + x;
      if (dbg.tuple.semseg[i] == scene::kGround && dbg.shadow_mask[i]) {
        for (int c = 0; c < 3; ++c) {
          CHECK(dbg.tuple.rgb.data[3 * i + c] ==
                doctest::Approx(0.5 * suncol[c] * 0.2).epsilon(1e-12));
        }
        found = true;
      }
    }
  }
  CHECK(found);
}

TEST_CASE("sky pixels carry the sentinel depth and sky class") {
  scene::LightSpec light;
  const auto tuple = scene::render(flat_gray_scene(), light, 32, 32);
  CHECK(tuple.semseg[5 * 32 + 16] == scene::kSky);  // above the horizon line
  CHECK(tuple.depth[5 * 32 + 16] == scene::kDepthSentinel);
  for (int c = 0; c < 3; ++c) CHECK(tuple.rgb.at(5, 16, c) > 0.0);
}

TEST_CASE("shadow mask equals the brute-force occlusion oracle") {
  const auto& grid = solar::default_positions();
  for (uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const scene::SceneSpec spec = scene::make_random_scene(seed);
    for (int p = 0; p < 3; ++p) {
      scene::LightSpec light;
      light.sun = grid[(seed + p) % grid.size()];
      const auto dbg = scene::render_debug(spec, light, 64, 64);
      const auto ref = oracle::shadow_mask_reference(spec, light, 64, 64);
      REQUIRE(dbg.shadow_mask.size() == ref.size());
      int mismatches = 0;
      for (size_t i = 0; i < ref.size(); ++i) mismatches += dbg.shadow_mask[i] != ref[i];
      CHECK(mismatches == 0);
    }
  }
}

TEST_CASE("depth and semseg are invariant to the light") {
  const scene::SceneSpec spec = scene::make_random_scene(42);
  scene::LightSpec a, b;
  a.sun = {-60.0, 60.0};
  b.sun = {95.0, 10.0};
  const auto ta = scene::render(spec, a, 48, 48);
  const auto tb = scene::render(spec, b, 48, 48);
  CHECK(ta.depth == tb.depth);
  CHECK(ta.semseg == tb.semseg);
  CHECK(ta.rgb.data != tb.rgb.data);
}

TEST_CASE("lowering the sun strictly grows the shadow on a canonical scene") {
  scene::SceneSpec spec;
  spec.ground.checker_contrast = 0.0;
  scene::Box box;
  box.center = {0.0, 4.0, 1.0};
  box.size = {1.5, 1.5, 2.0};
  spec.objects.push_back(box);
  int64_t prev = -1;
  for (double zen : {20.0, 40.0, 60.0, 75.0}) {
    scene::LightSpec light;
    light.sun = {90.0, zen};
    const auto dbg = scene::render_debug(spec, light, 64, 64);
    int64_t count = 0;
    for (uint8_t m : dbg.shadow_mask) count += m;
    CHECK(count > prev);
    prev = count;
  }
}

TEST_CASE("pre-clamp energy bound holds across random scenes") {
  for (uint64_t seed = 0; seed < 8; ++seed) {
    const scene::SceneSpec spec = scene::make_random_scene(seed);
    scene::LightSpec light;
    light.sun = {-15.0, 80.0};
    double max_albedo = std::max({spec.sky_albedo[0], spec.sky_albedo[1], spec.sky_albedo[2]});
    for (int c = 0; c < 3; ++c) {
      max_albedo = std::max(max_albedo,
                            spec.ground.albedo[c] * (1 + spec.ground.checker_contrast));
    }
    for (const auto& b : spec.objects) {
      max_albedo = std::max({max_albedo, b.albedo[0], b.albedo[1], b.albedo[2]});
    }
    const auto tuple = scene::render(spec, light, 32, 32);
    const double bound = max_albedo * (light.ambient + light.sun_intensity) + 1e-12;
    for (double v : tuple.rgb.data) CHECK(v <= bound);
  }
}

TEST_CASE("a camera inside a box is rejected") {
  scene::SceneSpec spec = flat_gray_scene();
  scene::Box box;
  box.center = {spec.camera.position[0], spec.camera.position[1], spec.camera.position[2]};
  box.size = {1, 1, 1};
  spec.objects.push_back(box);
  CHECK_THROWS_AS(scene::render(spec, scene::LightSpec{}, 16, 16), ValidationError);
}

TEST_CASE("below-horizon light and degenerate specs are rejected") {
  scene::LightSpec light;
  light.sun = {0.0, 95.0};
  CHECK_THROWS_AS(scene::render(flat_gray_scene(), light, 16, 16), ValidationError);

  scene::SceneSpec empty;
  CHECK_THROWS_AS(scene::render(empty, scene::LightSpec{}, 16, 16), ValidationError);
}

TEST_CASE("procedural scenes are deterministic in the seed") {
  const auto a = scene::make_random_scene(7);
  const auto b = scene::make_random_scene(7);
  const auto c = scene::make_random_scene(8);
  CHECK(a.objects.size() == b.objects.size());
  CHECK(a.camera.yaw_deg == b.camera.yaw_deg);
  const auto ra = scene::render(a, scene::LightSpec{}, 32, 32);
  const auto rb = scene::render(b, scene::LightSpec{}, 32, 32);
  CHECK(ra.rgb.data == rb.rgb.data);
  bool differs = scene::render(c, scene::LightSpec{}, 32, 32).rgb.data != ra.rgb.data;
  CHECK(differs);
}
