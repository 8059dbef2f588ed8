#pragma once

#include <filesystem>
#include <json.hpp>

#include "relumo/image.hpp"
#include "relumo/sh.hpp"

namespace relumo {

// Per-image intrinsic layers. Outside the mask albedo is 0, shadow is 1 and
// normals face the camera, so the Lambertian rendering is 0 there and the
// residual holds the original pixels (sky passes through unchanged).
struct Decomposition {
  Image albedo;    // 3-channel LinearRGB in [0,1]
  Image normals;   // 3-channel, unit length, x right / y up / z toward viewer
  Image shadow;    // 1-channel Scalar in [0,1]
  ShLighting lighting;
  Image residual;  // 3-channel signed
  Mask mask;
};

// s * albedo * max(0, L b(n)) per pixel. Values are rounded to single
// precision, and magnitudes below 2^-24 flush to zero; with single-precision
// inputs the difference image - rendering is then exact in double precision,
// which is what makes compose(lambertian(d), d.residual) reproduce the input
// bit for bit.
Image lambertian(const Image& albedo, const Image& normals, const Image& shadow,
                 const ShLighting& lighting);
Image lambertian(const Decomposition& d);

// rendering + residual (double-precision add).
Image compose(const Image& rendering, const Image& residual);

// residual = img - rendering.
Image residual_of(const Image& img, const Image& rendering);

// The original image, compose(lambertian(d), d.residual).
Image reconstruct(const Decomposition& d);

void validate(const Decomposition& d);

// lighting.json: {"sh": [27 floats, R row then G then B], "convention": "poly-v1"}
nlohmann::json lighting_to_json(const ShLighting& l);
ShLighting lighting_from_json(const nlohmann::json& j);
ShLighting load_lighting(const std::filesystem::path& path);
void save_lighting(const ShLighting& l, const std::filesystem::path& path);

// 9-element row-major rotation, either a bare array or {"R": [...]}.
Eigen::Matrix3d rotation_from_json(const nlohmann::json& j);
Eigen::Matrix3d load_rotation(const std::filesystem::path& path);

// Directory layout: albedo.png (16-bit), normals.pfm, shadow.png (16-bit
// gray), residual.pfm, lighting.json, mask.png, manifest.json. Albedo and
// shadow are quantised to their 16-bit PNG codes before the residual is
// recomputed, so the directory is self-consistent.
void save_decomposition(const Decomposition& d, const std::filesystem::path& dir,
                        const nlohmann::json& manifest);
Decomposition load_decomposition(const std::filesystem::path& dir);

// The decomposition as it will read back from disk (quantised layers).
Decomposition quantize_for_storage(const Decomposition& d);

}  // namespace relumo
