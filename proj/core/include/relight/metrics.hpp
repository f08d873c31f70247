#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relight/scene.hpp"

namespace relight::metrics {

/// Canonical SSIM parameterization: 11x11 Gaussian window, sigma 1.5,
/// K1=0.01, K2=0.03, dynamic range 1.0, per-channel maps averaged.
struct SsimConfig {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double range = 1.0;
};

void validate(const SsimConfig& cfg);

/// Mean SSIM map over the valid (fully windowed) region of one plane pair.
double ssim_plane(const std::vector<double>& a, const std::vector<double>& b, int height,
                  int width, const SsimConfig& cfg = {});

/// Mean SSIM of an RGB pair: per-channel maps averaged over channels.
/// Requires equal dims and both sides at least the window size.
double mssim(const RgbImage& a, const RgbImage& b, const SsimConfig& cfg = {});

struct PositionKey {
  double azimuth_deg = 0;
  double zenith_deg = 0;
  auto operator<=>(const PositionKey&) const = default;
};

struct Stat {
  int64_t count = 0;
  double mean = 0.0;
};

/// Per-sun-position mean MSSIM table plus a global mean, one named series
/// per evaluated model (or baseline).
struct MssimReport {
  static constexpr int kVersion = 1;
  SsimConfig cfg;
  struct Series {
    std::string name;
    std::map<PositionKey, Stat> per_position;
    Stat global;
  };
  std::vector<Series> series;
};

/// A relighting under evaluation: given a test tuple's geometry and its sun
/// position, produce the predicted image, or nullopt to skip the entry
/// (missing ground truth for a baseline position, say).
using RelightFn =
    std::function<std::optional<RgbImage>(const scene::RenderedTuple& tuple)>;

/// Relights every test tuple and aggregates mean MSSIM per sun position.
/// Entry-level parallelism with an index-ordered reduction, so results do
/// not depend on the thread count. Skipped entries warn on stderr.
MssimReport::Series evaluate_series(const std::string& name,
                                    const std::vector<scene::RenderedTuple>& test_tuples,
                                    const RelightFn& fn, const SsimConfig& cfg = {},
                                    int threads = 1);

/// Pixel-mean training image per sun position (the trivial predictor a
/// model must beat).
std::map<PositionKey, RgbImage> mean_images_by_position(
    const std::vector<scene::RenderedTuple>& train_tuples);

void write_report(std::ostream& out, const MssimReport& report);

}  // namespace relight::metrics
