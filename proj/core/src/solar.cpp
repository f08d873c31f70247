#include "relight/solar.hpp"

#include <algorithm>
#include <cmath>

namespace relight::solar {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDegToRad = kPi / 180.0;

// Unix seconds for 1950-01-01T00:00:00Z and 2051-01-01T00:00:00Z.
constexpr int64_t kWindowBegin = -631152000;
constexpr int64_t kWindowEnd = 2556144000;

double rad(double d) { return d * kDegToRad; }
double deg(double r) { return r / kDegToRad; }

}  // namespace

double wrap_azimuth(double degrees) {
  double a = std::fmod(degrees, 360.0);
  if (a <= -180.0) a += 360.0;
  if (a > 180.0) a -= 360.0;
  return a;
}

void validate(const GeoTime& gt) {
  if (!(gt.latitude_deg >= -90.0 && gt.latitude_deg <= 90.0)) {
    throw ValidationError("latitude outside [-90, 90]");
  }
  if (!(gt.longitude_deg >= -180.0 && gt.longitude_deg <= 180.0)) {
    throw ValidationError("longitude outside [-180, 180]");
  }
  if (gt.utc_seconds < kWindowBegin || gt.utc_seconds >= kWindowEnd) {
    throw ValidationError("timestamp outside the 1950-2050 ephemeris validity window");
  }
}

void validate(const SunPosition& p) {
  if (!std::isfinite(p.azimuth_deg) || !std::isfinite(p.zenith_deg)) {
    throw ValidationError("sun position angles must be finite");
  }
  if (p.azimuth_deg <= -180.0 || p.azimuth_deg > 180.0) {
    throw ValidationError("azimuth outside (-180, 180]");
  }
  if (p.zenith_deg < 0.0 || p.zenith_deg >= 180.0) {
    throw ValidationError("zenith outside [0, 180)");
  }
}

SunPosition sun_position(const GeoTime& gt) {
  validate(gt);

  // Julian centuries since J2000.
  const double jd = gt.utc_seconds / 86400.0 + 2440587.5;
  const double t = (jd - 2451545.0) / 36525.0;

  // Geometric mean longitude and anomaly of the sun, eccentricity of
  // Earth's orbit (Meeus ch. 25 series, as used by the NOAA calculator).
  const double l0 = std::fmod(280.46646 + t * (36000.76983 + 0.0003032 * t), 360.0);
  const double m = 357.52911 + t * (35999.05029 - 0.0001537 * t);
  const double e = 0.016708634 - t * (0.000042037 + 0.0000001267 * t);

  const double mr = rad(m);
  const double center = std::sin(mr) * (1.914602 - t * (0.004817 + 0.000014 * t)) +
                        std::sin(2 * mr) * (0.019993 - 0.000101 * t) +
                        std::sin(3 * mr) * 0.000289;
  const double true_long = l0 + center;

  // Apparent longitude (nutation/aberration via the lunar node) and the
  // corrected obliquity.
  const double omega = rad(125.04 - 1934.136 * t);
  const double app_long = true_long - 0.00569 - 0.00478 * std::sin(omega);
  const double eps0 =
      23.0 + (26.0 + (21.448 - t * (46.8150 + t * (0.00059 - t * 0.001813))) / 60.0) / 60.0;
  const double eps = rad(eps0 + 0.00256 * std::cos(omega));

  const double decl = std::asin(std::sin(eps) * std::sin(rad(app_long)));

  // Equation of time, minutes.
  const double y = std::tan(eps / 2) * std::tan(eps / 2);
  const double l0r = rad(l0);
  const double eqtime =
      4.0 * deg(y * std::sin(2 * l0r) - 2 * e * std::sin(mr) +
                4 * e * y * std::sin(mr) * std::cos(2 * l0r) -
                0.5 * y * y * std::sin(4 * l0r) - 1.25 * e * e * std::sin(2 * mr));

  // Hour angle from true solar time, degrees; negative before local noon.
  const double day_seconds =
      static_cast<double>(((gt.utc_seconds % 86400) + 86400) % 86400);
  double true_solar_min =
      std::fmod(day_seconds / 60.0 + eqtime + 4.0 * gt.longitude_deg, 1440.0);
  if (true_solar_min < 0) true_solar_min += 1440.0;
  const double hour_angle = true_solar_min / 4.0 - 180.0;

  const double latr = rad(gt.latitude_deg);
  const double har = rad(hour_angle);
  double cos_zen = std::sin(latr) * std::sin(decl) +
                   std::cos(latr) * std::cos(decl) * std::cos(har);
  cos_zen = std::clamp(cos_zen, -1.0, 1.0);
  const double zenith = deg(std::acos(cos_zen));

  double azimuth_north;  // clockwise from north, [0, 360)
  const double sin_zen = std::sin(rad(zenith));
  const double denom = std::cos(latr) * sin_zen;
  if (std::abs(denom) > 1e-12) {
    double cos_az = (std::sin(latr) * cos_zen - std::sin(decl)) / denom;
    cos_az = std::clamp(cos_az, -1.0, 1.0);
    const double a = deg(std::acos(cos_az));
    azimuth_north = hour_angle > 0 ? 180.0 + a : 180.0 - a;
  } else {
    // Sun at the zenith/nadir or observer at a pole: azimuth degenerate.
    azimuth_north = gt.latitude_deg >= 0 ? 180.0 : 0.0;
  }

  SunPosition p{wrap_azimuth(azimuth_north), zenith};
  if (p.zenith_deg >= 180.0) p.zenith_deg = std::nextafter(180.0, 0.0);
  return p;
}

namespace {

// Nearest multiple of 10, halfway cases away from zero.
double round_ten(double v) {
  return 10.0 * (v < 0 ? -std::floor(-v / 10.0 + 0.5) : std::floor(v / 10.0 + 0.5));
}

double angular_distance2(const SunPosition& a, const SunPosition& b) {
  const double da = wrap_azimuth(a.azimuth_deg - b.azimuth_deg);
  const double dz = a.zenith_deg - b.zenith_deg;
  return da * da + dz * dz;
}

}  // namespace

SunPosition discretize(const SunPosition& p, const DiscretizeConfig& cfg) {
  validate(p);
  if (cfg.grid.empty()) {
    SunPosition out{wrap_azimuth(round_ten(p.azimuth_deg)), round_ten(p.zenith_deg)};
    if (out.zenith_deg >= 180.0) out.zenith_deg = 170.0;
    return out;
  }
  const SunPosition* best = nullptr;
  double best_d = 0.0;
  for (const SunPosition& g : cfg.grid) {
    const double d = angular_distance2(p, g);
    if (best == nullptr || d < best_d) {
      best = &g;
      best_d = d;
    }
  }
  return *best;
}

LightVector encode_light(const SunPosition& p) {
  validate(p);
  return {p.azimuth_deg / 180.0, p.zenith_deg / 90.0};
}

SunPosition decode_light(const LightVector& v) {
  return {v.azimuth * 180.0, v.zenith * 90.0};
}

const std::vector<SunPosition>& default_positions() {
  static const std::vector<SunPosition> kPositions = {
      {-60.0, 60.0}, {80.0, 30.0},  {-80.0, 30.0}, {60.0, 60.0}, {0.0, 75.0},
      {-95.0, 10.0}, {-15.0, 80.0}, {15.0, 80.0},  {95.0, 10.0}};
  return kPositions;
}

}  // namespace relight::solar
