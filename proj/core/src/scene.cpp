#include "relight/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "relight/rng.hpp"

namespace relight::scene {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kShadowRayOffset = 1e-6;

double rad(double d) { return d * kPi / 180.0; }

Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 operator*(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 normalize(const Vec3& v) {
  const double n = std::sqrt(dot(v, v));
  return {v[0] / n, v[1] / n, v[2] / n};
}

struct BoxHit {
  double t = std::numeric_limits<double>::infinity();
  int axis = -1;   // slab axis that produced the entry point
  double sign = 0; // normal direction along that axis
};

// Slab intersection against [lo, hi]; returns entry t >= t_min if any.
bool intersect_box(const Vec3& origin, const Vec3& dir, const Box& box, double t_min,
                   BoxHit* hit) {
  const Vec3 lo = box.center - box.size * 0.5;
  const Vec3 hi = box.center + box.size * 0.5;
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  int enter_axis = -1;
  double enter_sign = 0;
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < lo[a] || origin[a] > hi[a]) return false;
      continue;
    }
    double t0 = (lo[a] - origin[a]) / dir[a];
    double t1 = (hi[a] - origin[a]) / dir[a];
    double sgn = -1.0;
    if (t0 > t1) {
      std::swap(t0, t1);
      sgn = 1.0;
    }
    if (t0 > t_enter) {
      t_enter = t0;
      enter_axis = a;
      enter_sign = sgn;
    }
    t_exit = std::min(t_exit, t1);
    if (t_enter > t_exit) return false;
  }
  if (t_exit < t_min) return false;
  const double t = t_enter >= t_min ? t_enter : t_exit;  // inside-the-box rays exit
  if (hit) {
    hit->t = t;
    hit->axis = enter_axis;
    hit->sign = enter_sign;
  }
  return true;
}

bool point_in_box(const Vec3& p, const Box& box) {
  const Vec3 lo = box.center - box.size * 0.5;
  const Vec3 hi = box.center + box.size * 0.5;
  return p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1] &&
         p[2] >= lo[2] && p[2] <= hi[2];
}

bool occluded(const Vec3& point, const Vec3& to_sun, const SceneSpec& spec) {
  const Vec3 origin = point + to_sun * kShadowRayOffset;
  for (const Box& box : spec.objects) {
    if (intersect_box(origin, to_sun, box, 0.0, nullptr)) return true;
  }
  return false;
}

Vec3 ground_albedo_at(const Ground& g, double x, double y) {
  const auto tile = [&](double v) {
    return static_cast<long long>(std::floor(v / g.checker_scale_m));
  };
  const bool odd = ((tile(x) + tile(y)) & 1) != 0;
  const double tone = odd ? 1.0 - g.checker_contrast : 1.0 + g.checker_contrast;
  return g.albedo * tone;
}

}  // namespace

const char* class_name(uint8_t id) {
  switch (id) {
    case kGround: return "ground";
    case kBuilding: return "building";
    case kVehicle: return "vehicle";
    case kSky: return "sky";
    default: return "unknown";
  }
}

Vec3 sun_direction(const solar::SunPosition& p) {
  const double az = rad(p.azimuth_deg);
  const double zen = rad(p.zenith_deg);
  return {std::sin(zen) * std::sin(az), std::sin(zen) * std::cos(az), std::cos(zen)};
}

Vec3 sun_color(const LightSpec& light) {
  const double zen = light.sun.zenith_deg;
  const double blend = std::clamp(zen / light.warm_zenith_deg, 0.0, 1.0);
  const double intensity = std::sqrt(std::max(0.0, std::cos(rad(zen))));
  Vec3 c;
  for (int i = 0; i < 3; ++i) {
    c[i] = ((1.0 - blend) + blend * light.warm_color[i]) * intensity;
  }
  return c;
}

void validate(const SceneSpec& spec) {
  if (spec.objects.empty()) throw ValidationError("scene needs at least one object");
  for (const Box& b : spec.objects) {
    if (b.size[0] <= 0 || b.size[1] <= 0 || b.size[2] <= 0) {
      throw ValidationError("box size components must be positive");
    }
    if (b.center[2] - b.size[2] * 0.5 < -1e-9) {
      throw ValidationError("box extends below the ground plane");
    }
    if (b.sem_class != kBuilding && b.sem_class != kVehicle) {
      throw ValidationError("object class must be building or vehicle");
    }
  }
  if (spec.camera.position[2] <= 0) throw ValidationError("camera must be above ground");
  if (spec.camera.vfov_deg <= 0 || spec.camera.vfov_deg >= 180) {
    throw ValidationError("camera FOV outside (0, 180)");
  }
  for (const Box& b : spec.objects) {
    if (point_in_box(spec.camera.position, b)) {
      throw ValidationError("camera is inside an object");
    }
  }
}

void validate(const LightSpec& light) {
  solar::validate(light.sun);
  if (light.sun.zenith_deg >= 90.0) throw ValidationError("sun must be above the horizon");
  if (light.ambient <= 0.0 || light.ambient >= 1.0) {
    throw ValidationError("ambient outside (0,1)");
  }
  if (light.sun_intensity < 0.0) throw ValidationError("sun intensity must be >= 0");
}

RenderDebug render_debug(const SceneSpec& spec, const LightSpec& light, int height,
                         int width) {
  validate(spec);
  validate(light);
  if (height < 1 || width < 1) throw ValidationError("raster dimensions must be >= 1");

  RenderDebug out;
  out.tuple.rgb = RgbImage(height, width);
  out.tuple.depth.assign(static_cast<size_t>(height) * width, kDepthSentinel);
  out.tuple.semseg.assign(static_cast<size_t>(height) * width, kSky);
  out.tuple.height = height;
  out.tuple.width = width;
  out.tuple.sun = light.sun;
  out.shadow_mask.assign(static_cast<size_t>(height) * width, 0);

  const Camera& cam = spec.camera;
  const double yaw = rad(cam.yaw_deg);
  const Vec3 forward{std::sin(yaw), std::cos(yaw), 0.0};
  const Vec3 right{std::cos(yaw), -std::sin(yaw), 0.0};
  const Vec3 up{0.0, 0.0, 1.0};
  const double tan_half = std::tan(rad(cam.vfov_deg) * 0.5);
  const double aspect = static_cast<double>(width) / height;

  const Vec3 to_sun = sun_direction(light.sun);
  const Vec3 suncol = sun_color(light);

  for (int py = 0; py < height; ++py) {
    for (int px = 0; px < width; ++px) {
      const double ndc_x = ((px + 0.5) / width * 2.0 - 1.0) * tan_half * aspect;
      const double ndc_y = (1.0 - (py + 0.5) / height * 2.0) * tan_half;
      const Vec3 dir = normalize(forward + right * ndc_x + up * ndc_y);

      // Nearest hit among ground plane and boxes.
      double best_t = std::numeric_limits<double>::infinity();
      int hit_kind = -1;  // -1 sky, 0 ground, 1 box
      size_t hit_box = 0;
      BoxHit best_hit;
      if (dir[2] < 0.0) {
        const double t = -cam.position[2] / dir[2];
        if (t > 0.0) {
          best_t = t;
          hit_kind = 0;
        }
      }
      for (size_t i = 0; i < spec.objects.size(); ++i) {
        BoxHit h;
        if (intersect_box(cam.position, dir, spec.objects[i], 1e-9, &h) && h.t < best_t) {
          best_t = h.t;
          hit_kind = 1;
          hit_box = i;
          best_hit = h;
        }
      }

      const size_t idx = static_cast<size_t>(py) * width + px;
      Vec3 albedo;
      Vec3 normal{0, 0, 1};
      double shadow = 0.0;
      if (hit_kind < 0) {
        albedo = spec.sky_albedo;  // sky: fully lit, unshadowed
      } else {
        const Vec3 hit_point = cam.position + dir * best_t;
        out.tuple.depth[idx] = std::min(dot(hit_point - cam.position, forward), kDepthSentinel);
        if (hit_kind == 0) {
          out.tuple.semseg[idx] = kGround;
          albedo = ground_albedo_at(spec.ground, hit_point[0], hit_point[1]);
        } else {
          const Box& box = spec.objects[hit_box];
          out.tuple.semseg[idx] = box.sem_class;
          albedo = box.albedo;
          normal = {0, 0, 0};
          normal[best_hit.axis] = best_hit.sign;
        }
        shadow = occluded(hit_point, to_sun, spec) ? 1.0 : 0.0;
        out.shadow_mask[idx] = shadow > 0.5 ? 1 : 0;
      }

      const double ndotl = hit_kind < 0 ? 1.0 : std::max(0.0, dot(normal, to_sun));
      const double direct = light.sun_intensity * (1.0 - shadow) * ndotl;
      for (int c = 0; c < 3; ++c) {
        const double v = albedo[c] * suncol[c] * (light.ambient + direct);
        out.tuple.rgb.data[idx * 3 + c] = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return out;
}

RenderedTuple render(const SceneSpec& spec, const LightSpec& light, int height, int width) {
  return render_debug(spec, light, height, width).tuple;
}

SceneSpec make_random_scene(uint64_t seed) {
  Rng rng(split_seed(seed, 0x5ce7e));
  SceneSpec spec;
  spec.seed = seed;

  spec.ground.albedo = {0.42 + rng.range(-0.03, 0.03), 0.42 + rng.range(-0.03, 0.03),
                        0.40 + rng.range(-0.03, 0.03)};
  spec.ground.checker_scale_m = 2.0;
  spec.ground.checker_contrast = 0.12;

  spec.camera.position = {rng.range(-0.8, 0.8), -6.0, rng.range(1.4, 1.8)};
  spec.camera.yaw_deg = rng.range(-6.0, 6.0);
  spec.camera.vfov_deg = 55.0;

  const Vec3 building_tones[] = {{0.55, 0.38, 0.30}, {0.52, 0.52, 0.55}, {0.60, 0.55, 0.45}};
  const Vec3 vehicle_tones[] = {
      {0.60, 0.16, 0.16}, {0.16, 0.22, 0.55}, {0.72, 0.72, 0.72}, {0.16, 0.16, 0.18}};

  const int n_buildings = rng.int_range(1, 2);
  for (int i = 0; i < n_buildings; ++i) {
    Box b;
    b.sem_class = kBuilding;
    const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
    b.size = {rng.range(2.5, 4.5), rng.range(2.5, 4.5), rng.range(3.0, 7.0)};
    b.center = {side * rng.range(3.5, 6.5), rng.range(4.0, 11.0), b.size[2] * 0.5};
    Vec3 tone = building_tones[rng.index(3)];
    const double j = rng.range(-0.04, 0.04);
    b.albedo = {tone[0] + j, tone[1] + j, tone[2] + j};
    spec.objects.push_back(b);
  }

  const int n_vehicles = rng.int_range(1, 3);
  for (int i = 0; i < n_vehicles; ++i) {
    Box b;
    b.sem_class = kVehicle;
    b.size = {rng.range(1.6, 2.0), rng.range(3.6, 4.6), rng.range(1.3, 1.7)};
    b.center = {rng.range(-3.5, 3.5), rng.range(1.0, 9.0), b.size[2] * 0.5};
    Vec3 tone = vehicle_tones[rng.index(4)];
    const double j = rng.range(-0.03, 0.03);
    b.albedo = {std::clamp(tone[0] + j, 0.02, 0.95), std::clamp(tone[1] + j, 0.02, 0.95),
                std::clamp(tone[2] + j, 0.02, 0.95)};
    spec.objects.push_back(b);
  }

  return spec;
}

}  // namespace relight::scene
