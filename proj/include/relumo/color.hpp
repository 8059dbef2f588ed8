#pragma once

#include <Eigen/Core>

#include "relumo/image.hpp"

namespace relumo {

// sRGB transfer functions (IEC 61966-2-1).
double srgb_to_linear(double v);
double linear_to_srgb(double v);

// Rec. 709 / sRGB luminance weights on linear RGB.
inline constexpr double kLumaR = 0.2126;
inline constexpr double kLumaG = 0.7152;
inline constexpr double kLumaB = 0.0722;

inline double luminance(double r, double g, double b) {
  return kLumaR * r + kLumaG * g + kLumaB * b;
}

// CIE L*a*b* (D65, 2 degree observer, sRGB primaries). Inputs are clipped to
// [0,1] before conversion; the white point is the image of (1,1,1) under the
// RGB->XYZ matrix, so white maps to a = b = 0 exactly.
Eigen::Vector3d linear_rgb_to_lab(const Eigen::Vector3d& rgb);
Eigen::Vector3d lab_to_linear_rgb(const Eigen::Vector3d& lab);

// d LAB / d rgb at `rgb`. Channels clipped by the [0,1] gate have zero
// columns.
Eigen::Matrix3d lab_jacobian(const Eigen::Vector3d& rgb);

Image rgb_to_lab(const Image& img);
Image lab_to_rgb(const Image& img);
Image srgb_to_linear(const Image& img);
Image linear_to_srgb(const Image& img);
// Single-channel luminance; 1-channel inputs are returned unchanged.
Image to_luminance(const Image& img);

}  // namespace relumo
