#include "relight/colorspace.hpp"

#include <cmath>

namespace relight {

namespace {

void check_raster_dims(int height, int width) {
  if (height < 1 || width < 1) {
    throw ValidationError("raster dimensions must be >= 1");
  }
}

}  // namespace

void validate(const RgbImage& img) {
  check_raster_dims(img.height, img.width);
  if (img.data.size() != 3 * img.pixels()) {
    throw ValidationError("RgbImage data size does not match dimensions");
  }
  for (double c : img.data) {
    if (!std::isfinite(c) || c < 0.0 || c > 1.0) {
      throw ValidationError("RgbImage component outside [0,1]");
    }
  }
}

void validate(const LabImage& img) {
  check_raster_dims(img.height, img.width);
  if (img.data.size() != 3 * img.pixels()) {
    throw ValidationError("LabImage data size does not match dimensions");
  }
  for (size_t i = 0; i < img.data.size(); i += 3) {
    const double l = img.data[i], a = img.data[i + 1], b = img.data[i + 2];
    if (!std::isfinite(l) || !std::isfinite(a) || !std::isfinite(b)) {
      throw ValidationError("LabImage component not finite");
    }
    if (l < 0.0 || l > 100.0 || a < -128.0 || a > 127.0 || b < -128.0 || b > 127.0) {
      throw ValidationError("LabImage component outside channel range");
    }
  }
}

namespace color {

LabImage srgb_to_lab(const RgbImage& img) {
  validate(img);
  LabImage out(img.height, img.width);
  for (size_t i = 0; i < img.data.size(); i += 3) {
    const auto lab = srgb_to_lab_pixel<double>(
        {img.data[i], img.data[i + 1], img.data[i + 2]});
    out.data[i] = lab[0];
    out.data[i + 1] = lab[1];
    out.data[i + 2] = lab[2];
  }
  return out;
}

RgbImage lab_to_srgb(const LabImage& img) {
  check_raster_dims(img.height, img.width);
  for (double c : img.data) {
    if (!std::isfinite(c)) throw ValidationError("LabImage component not finite");
  }
  RgbImage out(img.height, img.width);
  for (size_t i = 0; i < img.data.size(); i += 3) {
    const auto rgb = lab_to_srgb_pixel<double>(
        {img.data[i], img.data[i + 1], img.data[i + 2]});
    out.data[i] = rgb[0];
    out.data[i + 1] = rgb[1];
    out.data[i + 2] = rgb[2];
  }
  return out;
}

std::vector<double> normalize_lab(const LabImage& img) {
  const size_t n = img.pixels();
  std::vector<double> planes(3 * n);
  for (size_t i = 0; i < n; ++i) {
    planes[i] = img.data[3 * i] / kNormL;
    planes[n + i] = img.data[3 * i + 1] / kNormAb;
    planes[2 * n + i] = img.data[3 * i + 2] / kNormAb;
  }
  return planes;
}

LabImage denormalize_lab(const std::vector<double>& planes, int height, int width) {
  check_raster_dims(height, width);
  const size_t n = static_cast<size_t>(height) * width;
  if (planes.size() != 3 * n) {
    throw ValidationError("normalized Lab buffer size does not match dimensions");
  }
  LabImage out(height, width);
  for (size_t i = 0; i < n; ++i) {
    out.data[3 * i] = planes[i] * kNormL;
    out.data[3 * i + 1] = planes[n + i] * kNormAb;
    out.data[3 * i + 2] = planes[2 * n + i] * kNormAb;
  }
  return out;
}

}  // namespace color
}  // namespace relight
