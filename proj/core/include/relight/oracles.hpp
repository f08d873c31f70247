#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "relight/autodiff.hpp"
#include "relight/metrics.hpp"
#include "relight/scene.hpp"
#include "relight/solar.hpp"

// Independent reference implementations used to cross-check the production
// paths, both from the `verify` CLI suites and from the test binaries. Each
// oracle is written as its own route (different derivation or different
// numerical formulation) and never calls the code it checks.

namespace relight::oracle {

/// Colorimetry reference: the sRGB<->XYZ matrices are re-derived at runtime
/// from the primary chromaticities by solving the white-point system in long
/// double, instead of using the frozen constants in the colorspace module.
std::array<double, 3> srgb_to_lab_reference(const std::array<double, 3>& rgb);
std::array<double, 3> lab_to_srgb_reference(const std::array<double, 3>& lab);

/// Published solar-position reference case (the standard SPA validation
/// point): 2003-10-17 19:30:30 UTC at (39.742476, -105.1786), zenith
/// 50.11162 deg, azimuth 194.34024 deg clockwise from north.
struct SpaReferenceCase {
  solar::GeoTime geo;
  double zenith_deg;
  double azimuth_north_deg;
};
const SpaReferenceCase& spa_reference_case();

/// Independently coded ephemeris: right ascension + Greenwich sidereal time
/// route with an atan2 azimuth, rather than the equation-of-time route.
solar::SunPosition sun_position_reference(const solar::GeoTime& gt);

/// Definitional SSIM: explicit per-window weighted means and centered
/// covariances, no separable filtering.
double mssim_reference(const RgbImage& a, const RgbImage& b,
                       const metrics::SsimConfig& cfg = {});

/// Exhaustive occlusion test via ray-vs-face-rectangle intersections
/// against all six faces of every box. Shares only the documented ray
/// conventions (pixel-center camera rays, 1e-6 shadow-ray offset).
std::vector<uint8_t> shadow_mask_reference(const scene::SceneSpec& spec,
                                           const scene::LightSpec& light, int height,
                                           int width);

/// Central finite differences against analytic gradients. `eval` must
/// recompute the scalar loss from the given parameter store; `analytic`
/// holds the gradients under test. Step is scaled per element by
/// max(1, |theta|). Relative error uses max(|a|, |fd|, 1e-6) as denominator.
struct GradCheckReport {
  double max_rel_error = 0;
  std::string worst_param;
  int64_t checked = 0;
};
GradCheckReport grad_check(const nn::ParamStore<double>& params,
                           const std::map<std::string, nn::Tensor<double>>& analytic,
                           const std::function<double(const nn::ParamStore<double>&)>& eval,
                           double step, int threads = 1);

/// One verification check: name, outcome, human-readable detail.
struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<Check> verify_colorspace(uint64_t seed, int64_t samples);
std::vector<Check> verify_solar(uint64_t seed, int samples);
std::vector<Check> verify_ssim(uint64_t seed, int cases);
std::vector<Check> verify_gradcheck(uint64_t seed, int threads);
std::vector<Check> verify_renderer(uint64_t seed, int scenes, int positions);

}  // namespace relight::oracle
