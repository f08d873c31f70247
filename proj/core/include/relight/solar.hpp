#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "relight/common.hpp"

namespace relight::solar {

/// Geolocation plus a UTC instant. The ephemeris below is rated for years
/// 1950-2050; timestamps outside that window are rejected.
struct GeoTime {
  double latitude_deg = 0.0;   // [-90, 90]
  double longitude_deg = 0.0;  // [-180, 180], east positive
  int64_t utc_seconds = 0;     // seconds since the Unix epoch
};

/// Sun direction angles. Azimuth is measured from the scene-forward axis
/// (geographic north for ephemeris output), positive clockwise, wrapped to
/// (-180, 180]. Zenith is the angle from vertical in [0, 180); values below
/// 90 mean the sun is above the horizon.
struct SunPosition {
  double azimuth_deg = 0.0;
  double zenith_deg = 0.0;

  bool operator==(const SunPosition&) const = default;
};

/// The 2-element network encoding of a sun position:
/// (azimuth/180, zenith/90).
struct LightVector {
  double azimuth = 0.0;  // (-1, 1]
  double zenith = 0.0;   // >= 0

  bool operator==(const LightVector&) const = default;
};

/// Wraps any angle in degrees onto (-180, 180].
double wrap_azimuth(double degrees);

void validate(const GeoTime& gt);
void validate(const SunPosition& p);

inline bool above_horizon(const SunPosition& p) { return p.zenith_deg < 90.0; }

/// Astronomical sun azimuth/zenith from geolocation and time, via the
/// NOAA/Meeus low-accuracy ephemeris (no refraction, no elevation term).
/// Accuracy is within 0.3 degrees over the validity window, which is far
/// below the 10-degree label grid it feeds.
SunPosition sun_position(const GeoTime& gt);

/// How discretize() snaps a continuous position onto the label grid.
struct DiscretizeConfig {
  /// Empty: round each angle to the nearest multiple of 10 degrees, halfway
  /// cases away from zero. Non-empty: snap to the nearest listed position
  /// (angular metric, azimuth wrap-aware).
  std::vector<SunPosition> grid;
};

SunPosition discretize(const SunPosition& p, const DiscretizeConfig& cfg = {});

/// Exact affine encoding of a sun position; decode_light inverts it to
/// machine precision. Positions at or below the horizon encode fine but are
/// excluded from training (see above_horizon).
LightVector encode_light(const SunPosition& p);
SunPosition decode_light(const LightVector& v);

/// The nine reference sun positions used as the default dataset grid.
const std::vector<SunPosition>& default_positions();

}  // namespace relight::solar
