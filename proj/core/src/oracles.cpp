#include "relight/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "relight/colorspace.hpp"
#include "relight/losses.hpp"
#include "relight/network.hpp"
#include "relight/parallel.hpp"
#include "relight/pipeline.hpp"
#include "relight/rng.hpp"

namespace relight::oracle {

namespace {

constexpr double kPi = 3.14159265358979323846;
double rad(double d) { return d * kPi / 180.0; }
double deg(double r) { return r * 180.0 / kPi; }

// ---- colorimetry reference ------------------------------------------------

// 3x3 solve by Gaussian elimination with partial pivoting, long double.
void solve3(long double a[3][3], long double b[3]) {
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::fabs((double)a[r][col]) > std::fabs((double)a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (int r = col + 1; r < 3; ++r) {
      const long double f = a[r][col] / a[col][col];
      for (int c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (int r = 2; r >= 0; --r) {
    for (int c = r + 1; c < 3; ++c) b[r] -= a[r][c] * b[c];
    b[r] /= a[r][r];
  }
}

struct RefMatrices {
  long double rgb_to_xyz[3][3];
  long double xyz_to_rgb[3][3];
};

const RefMatrices& ref_matrices() {
  static const RefMatrices m = [] {
    // sRGB primary chromaticities and the D65 white point.
    const long double prim[3][2] = {{0.64L, 0.33L}, {0.30L, 0.60L}, {0.15L, 0.06L}};
    const long double white[3] = {0.95047L, 1.0L, 1.08883L};
    long double p[3][3];
    for (int i = 0; i < 3; ++i) {
      p[0][i] = prim[i][0] / prim[i][1];
      p[1][i] = 1.0L;
      p[2][i] = (1.0L - prim[i][0] - prim[i][1]) / prim[i][1];
    }
    long double a[3][3], s[3];
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) a[r][c] = p[r][c];
      s[r] = white[r];
    }
    solve3(a, s);
    RefMatrices out;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out.rgb_to_xyz[r][c] = p[r][c] * s[c];
    }
    // Invert via cofactors.
    const auto& mm = out.rgb_to_xyz;
    long double det = 0;
    for (int c = 0; c < 3; ++c) {
      det += mm[0][c] * (mm[1][(c + 1) % 3] * mm[2][(c + 2) % 3] -
                         mm[1][(c + 2) % 3] * mm[2][(c + 1) % 3]);
    }
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        out.xyz_to_rgb[r][c] = (mm[(c + 1) % 3][(r + 1) % 3] * mm[(c + 2) % 3][(r + 2) % 3] -
                                mm[(c + 1) % 3][(r + 2) % 3] * mm[(c + 2) % 3][(r + 1) % 3]) /
                               det;
      }
    }
    return out;
  }();
  return m;
}

long double inv_gamma_ref(long double c) {
  return c <= 0.04045L ? c / 12.92L : std::pow((c + 0.055L) / 1.055L, 2.4L);
}
long double gamma_ref(long double c) {
  return c <= 0.0031308L ? 12.92L * c : 1.055L * std::pow(c, 1.0L / 2.4L) - 0.055L;
}
long double lab_f_ref(long double t) {
  const long double d3 = (6.0L / 29) * (6.0L / 29) * (6.0L / 29);
  return t > d3 ? std::pow(t, 1.0L / 3) : t / (3 * (6.0L / 29) * (6.0L / 29)) + 4.0L / 29;
}
long double lab_finv_ref(long double t) {
  const long double d = 6.0L / 29;
  return t > d ? t * t * t : 3 * d * d * (t - 4.0L / 29);
}

// ---- renderer reference ---------------------------------------------------

using scene::Vec3;

Vec3 vadd(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 vscale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
double vdot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
Vec3 vnorm(const Vec3& v) {
  const double n = std::sqrt(vdot(v, v));
  return {v[0] / n, v[1] / n, v[2] / n};
}

// Ray vs axis-aligned rectangle on the plane axis=value, bounded on the two
// other axes. Returns the ray parameter or infinity.
double ray_face(const Vec3& origin, const Vec3& dir, int axis, double value,
                const Vec3& lo, const Vec3& hi) {
  if (dir[axis] == 0.0) return std::numeric_limits<double>::infinity();
  const double t = (value - origin[axis]) / dir[axis];
  if (t < 0.0) return std::numeric_limits<double>::infinity();
  const int u = (axis + 1) % 3, v = (axis + 2) % 3;
  const double pu = origin[u] + t * dir[u];
  const double pv = origin[v] + t * dir[v];
  if (pu < lo[u] || pu > hi[u] || pv < lo[v] || pv > hi[v]) {
    return std::numeric_limits<double>::infinity();
  }
  return t;
}

double ray_box_faces(const Vec3& origin, const Vec3& dir, const scene::Box& box) {
  const Vec3 lo{box.center[0] - box.size[0] / 2, box.center[1] - box.size[1] / 2,
                box.center[2] - box.size[2] / 2};
  const Vec3 hi{box.center[0] + box.size[0] / 2, box.center[1] + box.size[1] / 2,
                box.center[2] + box.size[2] / 2};
  double best = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    best = std::min(best, ray_face(origin, dir, axis, lo[axis], lo, hi));
    best = std::min(best, ray_face(origin, dir, axis, hi[axis], lo, hi));
  }
  // A ray that starts inside the box exits through exactly one face and is
  // counted by the face test; rays fully inside a degenerate slab are not
  // possible with positive box sizes.
  return best;
}

}  // namespace

std::array<double, 3> srgb_to_lab_reference(const std::array<double, 3>& rgb) {
  const auto& m = ref_matrices();
  long double lin[3];
  for (int i = 0; i < 3; ++i) lin[i] = inv_gamma_ref(rgb[i]);
  long double xyz[3];
  for (int r = 0; r < 3; ++r) {
    xyz[r] = m.rgb_to_xyz[r][0] * lin[0] + m.rgb_to_xyz[r][1] * lin[1] +
             m.rgb_to_xyz[r][2] * lin[2];
  }
  const long double white[3] = {0.95047L, 1.0L, 1.08883L};
  const long double fx = lab_f_ref(xyz[0] / white[0]);
  const long double fy = lab_f_ref(xyz[1] / white[1]);
  const long double fz = lab_f_ref(xyz[2] / white[2]);
  return {static_cast<double>(116 * fy - 16), static_cast<double>(500 * (fx - fy)),
          static_cast<double>(200 * (fy - fz))};
}

std::array<double, 3> lab_to_srgb_reference(const std::array<double, 3>& lab) {
  const auto& m = ref_matrices();
  const long double fy = (lab[0] + 16.0L) / 116.0L;
  const long double fx = fy + lab[1] / 500.0L;
  const long double fz = fy - lab[2] / 200.0L;
  const long double white[3] = {0.95047L, 1.0L, 1.08883L};
  const long double xyz[3] = {white[0] * lab_finv_ref(fx), white[1] * lab_finv_ref(fy),
                              white[2] * lab_finv_ref(fz)};
  std::array<double, 3> out;
  for (int r = 0; r < 3; ++r) {
    long double lin = m.xyz_to_rgb[r][0] * xyz[0] + m.xyz_to_rgb[r][1] * xyz[1] +
                      m.xyz_to_rgb[r][2] * xyz[2];
    long double c = gamma_ref(lin);
    out[r] = static_cast<double>(std::clamp(c, 0.0L, 1.0L));
  }
  return out;
}

const SpaReferenceCase& spa_reference_case() {
  // 2003-10-17 19:30:30 UTC == unix 1066419030.
  static const SpaReferenceCase kCase{{39.742476, -105.1786, 1066419030}, 50.11162,
                                      194.34024};
  return kCase;
}

solar::SunPosition sun_position_reference(const solar::GeoTime& gt) {
  solar::validate(gt);
  const double jd = gt.utc_seconds / 86400.0 + 2440587.5;
  const double t = (jd - 2451545.0) / 36525.0;
  const double l0 = std::fmod(280.46646 + t * (36000.76983 + 0.0003032 * t), 360.0);
  const double m = 357.52911 + t * (35999.05029 - 0.0001537 * t);
  const double mr = rad(m);
  const double c = std::sin(mr) * (1.914602 - t * (0.004817 + 0.000014 * t)) +
                   std::sin(2 * mr) * (0.019993 - 0.000101 * t) +
                   std::sin(3 * mr) * 0.000289;
  const double omega = rad(125.04 - 1934.136 * t);
  const double lambda = rad(l0 + c - 0.00569 - 0.00478 * std::sin(omega));
  const double eps0 =
      23.0 + (26.0 + (21.448 - t * (46.8150 + t * (0.00059 - t * 0.001813))) / 60.0) / 60.0;
  const double eps = rad(eps0 + 0.00256 * std::cos(omega));

  const double ra = deg(std::atan2(std::cos(eps) * std::sin(lambda), std::cos(lambda)));
  const double decl = std::asin(std::sin(eps) * std::sin(lambda));

  double gmst = std::fmod(280.46061837 + 360.98564736629 * (jd - 2451545.0) +
                              0.000387933 * t * t - t * t * t / 38710000.0,
                          360.0);
  if (gmst < 0) gmst += 360.0;
  const double h = rad(std::fmod(gmst + gt.longitude_deg - ra + 720.0, 360.0));

  const double latr = rad(gt.latitude_deg);
  double cos_zen =
      std::sin(latr) * std::sin(decl) + std::cos(latr) * std::cos(decl) * std::cos(h);
  cos_zen = std::clamp(cos_zen, -1.0, 1.0);
  const double zen = deg(std::acos(cos_zen));
  const double az_south = deg(std::atan2(
      std::sin(h), std::cos(h) * std::sin(latr) - std::tan(decl) * std::cos(latr)));
  return {solar::wrap_azimuth(az_south + 180.0), zen};
}

double mssim_reference(const RgbImage& a, const RgbImage& b,
                       const metrics::SsimConfig& cfg) {
  metrics::validate(cfg);
  if (a.height != b.height || a.width != b.width) {
    throw ValidationError("mssim_reference: dims disagree");
  }
  if (a.height < cfg.window || a.width < cfg.window) {
    throw ValidationError("mssim_reference: image smaller than window");
  }
  const int win = cfg.window;
  std::vector<double> g(win);
  const double center = (win - 1) / 2.0;
  double gsum = 0;
  for (int i = 0; i < win; ++i) {
    g[i] = std::exp(-(i - center) * (i - center) / (2 * cfg.sigma * cfg.sigma));
    gsum += g[i];
  }
  for (double& v : g) v /= gsum;

  const double c1 = (cfg.k1 * cfg.range) * (cfg.k1 * cfg.range);
  const double c2 = (cfg.k2 * cfg.range) * (cfg.k2 * cfg.range);
  const int hv = a.height - win + 1, wv = a.width - win + 1;

  double channel_acc = 0;
  for (int ch = 0; ch < 3; ++ch) {
    double acc = 0;
    for (int y = 0; y < hv; ++y) {
      for (int x = 0; x < wv; ++x) {
        double mu1 = 0, mu2 = 0;
        for (int i = 0; i < win; ++i) {
          for (int j = 0; j < win; ++j) {
            const double w = g[i] * g[j];
            mu1 += w * a.at(y + i, x + j, ch);
            mu2 += w * b.at(y + i, x + j, ch);
          }
        }
        double v1 = 0, v2 = 0, cov = 0;
        for (int i = 0; i < win; ++i) {
          for (int j = 0; j < win; ++j) {
            const double w = g[i] * g[j];
            const double da = a.at(y + i, x + j, ch) - mu1;
            const double db = b.at(y + i, x + j, ch) - mu2;
            v1 += w * da * da;
            v2 += w * db * db;
            cov += w * da * db;
          }
        }
        acc += ((2 * mu1 * mu2 + c1) * (2 * cov + c2)) /
               ((mu1 * mu1 + mu2 * mu2 + c1) * (v1 + v2 + c2));
      }
    }
    channel_acc += acc / (static_cast<double>(hv) * wv);
  }
  return channel_acc / 3.0;
}

std::vector<uint8_t> shadow_mask_reference(const scene::SceneSpec& spec,
                                           const scene::LightSpec& light, int height,
                                           int width) {
  const scene::Camera& cam = spec.camera;
  const double yaw = rad(cam.yaw_deg);
  const Vec3 forward{std::sin(yaw), std::cos(yaw), 0.0};
  const Vec3 right{std::cos(yaw), -std::sin(yaw), 0.0};
  const Vec3 up{0.0, 0.0, 1.0};
  const double tan_half = std::tan(rad(cam.vfov_deg) * 0.5);
  const double aspect = static_cast<double>(width) / height;
  const Vec3 to_sun = scene::sun_direction(light.sun);

  std::vector<uint8_t> mask(static_cast<size_t>(height) * width, 0);
  for (int py = 0; py < height; ++py) {
    for (int px = 0; px < width; ++px) {
      const double sx = ((px + 0.5) / width * 2.0 - 1.0) * tan_half * aspect;
      const double sy = (1.0 - (py + 0.5) / height * 2.0) * tan_half;
      const Vec3 dir = vnorm(vadd(forward, vadd(vscale(right, sx), vscale(up, sy))));

      double best = std::numeric_limits<double>::infinity();
      if (dir[2] < 0.0) {
        const double t = -cam.position[2] / dir[2];
        if (t > 0.0) best = t;
      }
      for (const scene::Box& box : spec.objects) {
        const double t = ray_box_faces(cam.position, dir, box);
        if (t > 1e-9 && t < best) best = t;
      }
      if (!std::isfinite(best)) continue;  // sky

      const Vec3 hit = vadd(cam.position, vscale(dir, best));
      const Vec3 origin = vadd(hit, vscale(to_sun, 1e-6));
      bool occluded = false;
      for (const scene::Box& box : spec.objects) {
        if (std::isfinite(ray_box_faces(origin, to_sun, box))) {
          occluded = true;
          break;
        }
      }
      mask[static_cast<size_t>(py) * width + px] = occluded ? 1 : 0;
    }
  }
  return mask;
}

GradCheckReport grad_check(const nn::ParamStore<double>& params,
                           const std::map<std::string, nn::Tensor<double>>& analytic,
                           const std::function<double(const nn::ParamStore<double>&)>& eval,
                           double step, int threads) {
  struct Slot {
    double rel = 0;
    std::string name;
  };
  std::vector<std::pair<std::string, int64_t>> work;  // (param, element)
  for (const auto& [name, g] : analytic) {
    for (int64_t i = 0; i < g.numel(); ++i) work.push_back({name, i});
  }
  std::vector<Slot> slots(threads > 0 ? threads : 1);
  std::atomic<int64_t> next{0};
  auto worker = [&](int tid) {
    nn::ParamStore<double> local = params;  // private copy to perturb
    for (int64_t w = next.fetch_add(1); w < static_cast<int64_t>(work.size());
         w = next.fetch_add(1)) {
      const auto& [name, i] = work[w];
      nn::Tensor<double>& t = local.at(name);
      const double theta = t.v[i];
      const double h = step * std::max(1.0, std::abs(theta));
      t.v[i] = theta + h;
      const double fp = eval(local);
      t.v[i] = theta - h;
      const double fm = eval(local);
      t.v[i] = theta;
      const double fd = (fp - fm) / (2 * h);
      const double an = analytic.at(name).v[i];
      const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
      if (rel > slots[tid].rel) {
        slots[tid].rel = rel;
        slots[tid].name = name + "[" + std::to_string(i) + "]";
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < static_cast<int>(slots.size()); ++t) pool.emplace_back(worker, t);
  worker(0);
  for (auto& th : pool) th.join();

  GradCheckReport report;
  report.checked = static_cast<int64_t>(work.size());
  for (const Slot& s : slots) {
    if (s.rel > report.max_rel_error) {
      report.max_rel_error = s.rel;
      report.worst_param = s.name;
    }
  }
  return report;
}

}  // namespace relight::oracle
