#include "relumo/color.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "relumo/error.hpp"

namespace relumo {

namespace {

const Eigen::Matrix3d& rgb_to_xyz_matrix() {
  static const Eigen::Matrix3d m = (Eigen::Matrix3d() <<
      0.4124564, 0.3575761, 0.1804375,
      0.2126729, 0.7151522, 0.0721750,
      0.0193339, 0.1191920, 0.9503041).finished();
  return m;
}

const Eigen::Matrix3d& xyz_to_rgb_matrix() {
  static const Eigen::Matrix3d m = rgb_to_xyz_matrix().inverse();
  return m;
}

const Eigen::Vector3d& white_point() {
  static const Eigen::Vector3d w = rgb_to_xyz_matrix() * Eigen::Vector3d::Ones();
  return w;
}

constexpr double kDelta = 6.0 / 29.0;
constexpr double kDelta3 = kDelta * kDelta * kDelta;

double lab_f(double t) {
  return t > kDelta3 ? std::cbrt(t) : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_f_prime(double t) {
  if (t > kDelta3) {
    const double c = std::cbrt(t);
    return 1.0 / (3.0 * c * c);
  }
  return 1.0 / (3.0 * kDelta * kDelta);
}

double lab_f_inv(double f) {
  return f > kDelta ? f * f * f : 3.0 * kDelta * kDelta * (f - 4.0 / 29.0);
}

}  // namespace

double srgb_to_linear(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double v) {
  return v <= 0.0031308 ? v * 12.92 : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

Eigen::Vector3d linear_rgb_to_lab(const Eigen::Vector3d& rgb) {
  const Eigen::Vector3d clipped = rgb.cwiseMax(0.0).cwiseMin(1.0);
  const Eigen::Vector3d xyz =
      (rgb_to_xyz_matrix() * clipped).cwiseQuotient(white_point());
  const double fx = lab_f(xyz.x());
  const double fy = lab_f(xyz.y());
  const double fz = lab_f(xyz.z());
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Eigen::Vector3d lab_to_linear_rgb(const Eigen::Vector3d& lab) {
  const double fy = (lab.x() + 16.0) / 116.0;
  const double fx = fy + lab.y() / 500.0;
  const double fz = fy - lab.z() / 200.0;
  const Eigen::Vector3d xyz =
      Eigen::Vector3d(lab_f_inv(fx), lab_f_inv(fy), lab_f_inv(fz))
          .cwiseProduct(white_point());
  return xyz_to_rgb_matrix() * xyz;
}

Eigen::Matrix3d lab_jacobian(const Eigen::Vector3d& rgb) {
  Eigen::Matrix3d gate = Eigen::Matrix3d::Zero();
  for (int c = 0; c < 3; ++c)
    gate(c, c) = (rgb[c] >= 0.0 && rgb[c] <= 1.0) ? 1.0 : 0.0;
  const Eigen::Vector3d clipped = rgb.cwiseMax(0.0).cwiseMin(1.0);
  const Eigen::Vector3d t =
      (rgb_to_xyz_matrix() * clipped).cwiseQuotient(white_point());
  // d f(t) / d rgb, rows are fx, fy, fz.
  Eigen::Matrix3d df;
  for (int r = 0; r < 3; ++r)
    df.row(r) = lab_f_prime(t[r]) / white_point()[r] *
                rgb_to_xyz_matrix().row(r);
  Eigen::Matrix3d out;
  out.row(0) = 116.0 * df.row(1);
  out.row(1) = 500.0 * (df.row(0) - df.row(1));
  out.row(2) = 200.0 * (df.row(1) - df.row(2));
  return out * gate;
}

Image rgb_to_lab(const Image& img) {
  if (img.space() != ColorSpace::LinearRGB || img.channels() != 3)
    throw Error("rgb_to_lab expects a 3-channel LinearRGB image");
  Image out = img.like(3, ColorSpace::LAB);
  const auto n = static_cast<std::ptrdiff_t>(img.pixel_count());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    auto src = img.pixel(static_cast<std::size_t>(p));
    const Eigen::Vector3d lab =
        linear_rgb_to_lab(Eigen::Vector3d(src[0], src[1], src[2]));
    auto dst = out.pixel(static_cast<std::size_t>(p));
    dst[0] = lab[0];
    dst[1] = lab[1];
    dst[2] = lab[2];
  }
  return out;
}

Image lab_to_rgb(const Image& img) {
  if (img.space() != ColorSpace::LAB)
    throw Error("lab_to_rgb expects a LAB image");
  Image out = img.like(3, ColorSpace::LinearRGB);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    auto src = img.pixel(p);
    const Eigen::Vector3d rgb =
        lab_to_linear_rgb(Eigen::Vector3d(src[0], src[1], src[2]));
    auto dst = out.pixel(p);
    for (int c = 0; c < 3; ++c) dst[c] = rgb[c];
  }
  return out;
}

Image srgb_to_linear(const Image& img) {
  if (img.space() != ColorSpace::SRGB)
    throw Error("srgb_to_linear expects an SRGB image");
  Image out = img.with_space(ColorSpace::LinearRGB);
  for (double& v : out.data()) v = srgb_to_linear(v);
  return out;
}

Image linear_to_srgb(const Image& img) {
  if (img.space() != ColorSpace::LinearRGB)
    throw Error("linear_to_srgb expects a LinearRGB image");
  Image out = img.with_space(ColorSpace::SRGB);
  for (double& v : out.data()) v = linear_to_srgb(std::max(v, 0.0));
  return out;
}

Image to_luminance(const Image& img) {
  if (img.channels() == 1) return img;
  Image out = img.like(1, ColorSpace::Scalar);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    auto px = img.pixel(p);
    out.data()[p] = luminance(px[0], px[1], px[2]);
  }
  return out;
}

}  // namespace relumo
