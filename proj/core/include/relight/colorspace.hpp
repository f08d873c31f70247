#pragma once

#include <array>
#include <cmath>

#include "relight/image.hpp"

namespace relight::color {

// D65 2-degree observer white point. Fixed constants of the module together
// with the sRGB primary matrix below.
inline constexpr double kWhiteX = 0.95047;
inline constexpr double kWhiteY = 1.0;
inline constexpr double kWhiteZ = 1.08883;

// Linear sRGB -> XYZ, derived in double precision from the sRGB primary
// chromaticities so that each row sums to the white point exactly (a gray
// input lands on the neutral axis to machine precision). The widely printed
// 7-digit tables break that property in the 7th decimal.
inline constexpr std::array<double, 9> kRgbToXyz = {
    0.41245643908969226, 0.35757607764390892, 0.18043748326639891,
    0.21267285140562256, 0.71515215528781784, 0.07217499330655956,
    0.01933389558232930, 0.11919202588130294, 0.95030407853636767};

inline constexpr std::array<double, 9> kXyzToRgb = {
    3.24045416211410453,  -1.53713851279771596, -0.49853140955601599,
    -0.96926603050518700, 1.87601084544669439,  0.04155601753034985,
    0.05564343095911473,  -0.20402591351675384, 1.05722518822317912};

// Normalization divisors mapping Lab onto network-friendly ranges:
// L' = L/100 in [0,1], a' = a/110 and b' = b/110 in roughly [-1,1].
inline constexpr double kNormL = 100.0;
inline constexpr double kNormAb = 110.0;

namespace detail {

template <typename T>
T srgb_inverse_gamma(T c) {
  return c <= T(0.04045) ? c / T(12.92)
                         : std::pow((c + T(0.055)) / T(1.055), T(2.4));
}

// Linear component -> sRGB. The linear branch also covers negative
// out-of-gamut values, so no NaN can escape from pow.
template <typename T>
T srgb_gamma(T c) {
  return c <= T(0.0031308) ? T(12.92) * c
                           : T(1.055) * std::pow(c, T(1.0 / 2.4)) - T(0.055);
}

template <typename T>
T srgb_gamma_deriv(T c) {
  return c <= T(0.0031308)
             ? T(12.92)
             : T(1.055 / 2.4) * std::pow(c, T(1.0 / 2.4 - 1.0));
}

inline constexpr double kLabDelta = 6.0 / 29.0;

template <typename T>
T lab_f(T t) {
  constexpr T d = T(kLabDelta);
  return t > d * d * d ? std::cbrt(t) : t / (T(3) * d * d) + T(4.0 / 29.0);
}

template <typename T>
T lab_f_inv(T t) {
  constexpr T d = T(kLabDelta);
  return t > d ? t * t * t : T(3) * d * d * (t - T(4.0 / 29.0));
}

template <typename T>
T lab_f_inv_deriv(T t) {
  constexpr T d = T(kLabDelta);
  return t > d ? T(3) * t * t : T(3) * d * d;
}

}  // namespace detail

/// One sRGB pixel -> Lab. Components of `rgb` must be finite.
template <typename T>
std::array<T, 3> srgb_to_lab_pixel(const std::array<T, 3>& rgb) {
  using detail::lab_f;
  const T r = detail::srgb_inverse_gamma(rgb[0]);
  const T g = detail::srgb_inverse_gamma(rgb[1]);
  const T b = detail::srgb_inverse_gamma(rgb[2]);
  const auto& m = kRgbToXyz;
  const T x = T(m[0]) * r + T(m[1]) * g + T(m[2]) * b;
  const T y = T(m[3]) * r + T(m[4]) * g + T(m[5]) * b;
  const T z = T(m[6]) * r + T(m[7]) * g + T(m[8]) * b;
  const T fx = lab_f(x / T(kWhiteX));
  const T fy = lab_f(y / T(kWhiteY));
  const T fz = lab_f(z / T(kWhiteZ));
  return {T(116) * fy - T(16), T(500) * (fx - fy), T(200) * (fy - fz)};
}

/// One Lab pixel -> sRGB with out-of-gamut results clamped to [0,1].
template <typename T>
std::array<T, 3> lab_to_srgb_pixel(const std::array<T, 3>& lab) {
  using detail::lab_f_inv;
  const T fy = (lab[0] + T(16)) / T(116);
  const T fx = fy + lab[1] / T(500);
  const T fz = fy - lab[2] / T(200);
  const T x = T(kWhiteX) * lab_f_inv(fx);
  const T y = T(kWhiteY) * lab_f_inv(fy);
  const T z = T(kWhiteZ) * lab_f_inv(fz);
  const auto& m = kXyzToRgb;
  std::array<T, 3> out{T(m[0]) * x + T(m[1]) * y + T(m[2]) * z,
                       T(m[3]) * x + T(m[4]) * y + T(m[5]) * z,
                       T(m[6]) * x + T(m[7]) * y + T(m[8]) * z};
  for (T& c : out) {
    c = detail::srgb_gamma(c);
    c = c < T(0) ? T(0) : (c > T(1) ? T(1) : c);
  }
  return out;
}

/// Whole-image conversions. Inputs are validated; non-finite pixels reject
/// with ValidationError.
LabImage srgb_to_lab(const RgbImage& img);
RgbImage lab_to_srgb(const LabImage& img);

/// Lab raster -> planar normalized buffer (L' plane, a' plane, b' plane),
/// laid out channel-major for network consumption.
/// denormalize_lab(normalize_lab(x)) == x to machine precision.
std::vector<double> normalize_lab(const LabImage& img);
LabImage denormalize_lab(const std::vector<double>& planes, int height, int width);

template <typename T>
std::array<T, 3> normalize_lab_pixel(const std::array<T, 3>& lab) {
  return {lab[0] / T(kNormL), lab[1] / T(kNormAb), lab[2] / T(kNormAb)};
}

template <typename T>
std::array<T, 3> denormalize_lab_pixel(const std::array<T, 3>& n) {
  return {n[0] * T(kNormL), n[1] * T(kNormAb), n[2] * T(kNormAb)};
}

}  // namespace relight::color
