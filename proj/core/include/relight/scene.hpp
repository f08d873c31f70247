#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "relight/image.hpp"
#include "relight/solar.hpp"

namespace relight::scene {

using Vec3 = std::array<double, 3>;

/// Semantic class ids, fixed palette of the synthetic dataset.
enum SemClass : uint8_t { kGround = 0, kBuilding = 1, kVehicle = 2, kSky = 3 };
inline constexpr int kNumClasses = 4;
const char* class_name(uint8_t id);

/// Depth value stored for sky pixels (meters). Chosen so the full range maps
/// onto 16-bit storage at the default 1mm depth scale.
inline constexpr double kDepthSentinel = 65.535;

/// Axis-aligned box resting in the scene. World frame: +x right, +y forward
/// (the azimuth reference axis), +z up; the ground is the z=0 plane.
struct Box {
  Vec3 center{0, 0, 0};  // meters
  Vec3 size{1, 1, 1};    // full extents, meters
  uint8_t sem_class = kBuilding;
  Vec3 albedo{0.5, 0.5, 0.5};
};

struct Ground {
  Vec3 albedo{0.45, 0.45, 0.43};
  double checker_scale_m = 2.0;   // edge length of one checker tile
  double checker_contrast = 0.12; // +/- multiplicative tone split
};

struct Camera {
  Vec3 position{0, -6, 1.6};  // meters, must be above ground
  double yaw_deg = 0.0;       // rotation about +z; 0 looks along +y
  double vfov_deg = 55.0;
};

struct SceneSpec {
  uint64_t seed = 0;
  Ground ground;
  std::vector<Box> objects;  // at least one, all above the ground plane
  Camera camera;
  Vec3 sky_albedo{0.55, 0.70, 0.95};
};

/// Directional sun illumination. sun_color() blends from neutral overhead to
/// warm (1.0, 0.75, 0.5) at zenith 85 and scales by sqrt(cos zenith), so a
/// low sun is both warm and dim; ambient rides the same tint, which is what
/// produces the global color-temperature shift.
struct LightSpec {
  solar::SunPosition sun{0.0, 30.0};  // zenith must stay below 90
  double ambient = 0.25;              // (0,1)
  double sun_intensity = 0.75;
  Vec3 warm_color{1.0, 0.75, 0.5};
  double warm_zenith_deg = 85.0;
};

/// One training sample: aligned rasters plus the sun position that lit them.
struct RenderedTuple {
  RgbImage rgb;
  std::vector<double> depth;    // meters, planar z-depth; kDepthSentinel = sky
  std::vector<uint8_t> semseg;  // class ids
  int height = 0;
  int width = 0;
  solar::SunPosition sun;
};

/// Unit vector pointing toward the sun. Zenith 0 gives (0,0,1); zenith 90,
/// azimuth 0 gives the scene-forward axis (0,1,0).
Vec3 sun_direction(const solar::SunPosition& p);

/// Sun tint times intensity for a given zenith (see LightSpec).
Vec3 sun_color(const LightSpec& light);

void validate(const SceneSpec& spec);
void validate(const LightSpec& light);

/// Ray-casts the scene: nearest ground/box hit per pixel, hard shadows via
/// an occlusion ray toward the sun, Lambertian shading
///   albedo * sun_color * (ambient + intensity * (1-shadow) * max(0, n.l)),
/// clamped to [0,1]. Pixels that miss everything are sky.
RenderedTuple render(const SceneSpec& spec, const LightSpec& light, int height, int width);

/// render() plus the per-pixel byte masks the tests need: shadow (occlusion
/// ray toward the sun hit a box) and the hit class before sky substitution.
struct RenderDebug {
  RenderedTuple tuple;
  std::vector<uint8_t> shadow_mask;  // 1 = occluded from the sun
};
RenderDebug render_debug(const SceneSpec& spec, const LightSpec& light, int height, int width);

/// Deterministic procedural road scene for a given seed: checkered ground,
/// a few building and vehicle boxes, a near-fixed camera.
SceneSpec make_random_scene(uint64_t seed);

}  // namespace relight::scene
