#pragma once

#include <cstdint>
#include <vector>

#include "relight/common.hpp"

namespace relight {

/// Interleaved r,g,b raster, components in [0,1]. Row-major, row 0 on top.
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<double> data;  // size 3*height*width, (r,g,b) per pixel

  RgbImage() = default;
  RgbImage(int h, int w) : height(h), width(w), data(static_cast<size_t>(3) * h * w, 0.0) {}

  double& at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  double at(int y, int x, int c) const { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  size_t pixels() const { return static_cast<size_t>(height) * width; }
};

/// Interleaved L,a,b raster. L in [0,100], a and b in [-128,127].
struct LabImage {
  int height = 0;
  int width = 0;
  std::vector<double> data;  // size 3*height*width, (L,a,b) per pixel

  LabImage() = default;
  LabImage(int h, int w) : height(h), width(w), data(static_cast<size_t>(3) * h * w, 0.0) {}

  double& at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  double at(int y, int x, int c) const { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  size_t pixels() const { return static_cast<size_t>(height) * width; }
};

/// Throws ValidationError unless all components are finite and within the
/// stated channel ranges.
void validate(const RgbImage& img);
void validate(const LabImage& img);

}  // namespace relight
