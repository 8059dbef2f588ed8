#pragma once

#include <Eigen/Core>
#include <vector>

#include "relumo/image.hpp"
#include "relumo/sh.hpp"

namespace relumo {

// Equirectangular radiance map (width = 2 * height). Row v spans polar
// angle theta = pi (v + 0.5) / H measured from +y (up); column u spans
// azimuth phi = 2 pi (u + 0.5) / W, with direction
//   (sin theta sin phi, cos theta, sin theta cos phi),
// i.e. the same x right / y up / z toward-viewer frame as normal maps.
// `alignment` rotates env-map directions into the reference camera frame.
struct EnvMap {
  Image radiance;
  Eigen::Matrix3d alignment = Eigen::Matrix3d::Identity();
};

// Validates the raster shape and the alignment rotation.
void validate(const EnvMap& env);

Eigen::Vector3d envmap_direction(double u, double v, int width, int height);
// Continuous pixel coordinates (pixel centres at integers) of a direction.
Eigen::Vector2d envmap_coords(const Eigen::Vector3d& dir, int width, int height);

// Clamped-cosine irradiance E(n) = sum_j radiance_j max(0, n . w_j) dOmega_j,
// direct summation with dOmega = sin(theta) dtheta dphi. Maps larger than
// 128x64 are first pooled (solid-angle weighted) to at most that size.
std::vector<Eigen::Vector3d> envmap_irradiance(
    const Image& radiance, const std::vector<Eigen::Vector3d>& normals);

// Least-squares SH fit of the irradiance at `samples` (>= 1000) near-uniform
// normals. Result is in the env-map frame; apply env.alignment with
// rotate_lighting to move it to the camera frame. An all-black map fits
// L = 0; non-finite or negative radiance throws.
ShLighting fit_envmap_lighting(const EnvMap& env, int samples = 2000);
ShLighting fit_envmap_lighting_aligned(const EnvMap& env, int samples = 2000);

// output(theta, phi) = input(R^-1 dir(theta, phi)), bilinear, horizontally
// wrapped. The alignment is carried over unchanged.
EnvMap rotate_envmap(const EnvMap& env, const Eigen::Matrix3d& r);

// Solid-angle weighted box pooling of an equirectangular map by `factor`.
Image pool_envmap(const Image& radiance, int factor);

}  // namespace relumo
