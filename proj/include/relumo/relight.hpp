#pragma once

#include <optional>
#include <variant>

#include "relumo/camera.hpp"
#include "relumo/decompose.hpp"
#include "relumo/decomposition.hpp"
#include "relumo/envmap.hpp"
#include "relumo/sh.hpp"

namespace relumo {

enum class ShadowMode { None, Geometric, KeepOriginal };
enum class SkyFill { Black, Original, FlatColor };

ShadowMode parse_shadow_mode(std::string_view s);
SkyFill parse_sky_fill(std::string_view s);
std::string_view to_string(ShadowMode m);
std::string_view to_string(SkyFill f);

struct RelightOptions {
  bool use_residual = false;
  ShadowMode shadow_mode = ShadowMode::KeepOriginal;
  SkyFill sky_fill = SkyFill::FlatColor;
  // Geometric mode: include the ray-marched cast term (needs depth).
  bool cast_shadows = true;
};

using LightingTarget = std::variant<ShLighting, EnvMap>;

struct RelightRequest {
  const Decomposition* decomposition = nullptr;
  LightingTarget target;
  RelightOptions options;
  std::optional<CameraView> camera;  // depth for geometric cast shadows
};

// Env maps are fitted and rotated by their alignment into the camera frame.
ShLighting resolve_target(const LightingTarget& target);

inline constexpr double kAttachedFloor = 0.2;
inline constexpr double kCastShadowValue = 0.3;

// Pixels whose ray toward the light (camera-frame direction) passes behind
// the depth buffer. The ray is marched in roughly half-pixel screen steps
// with perspective-correct depth; a sample counts as occluded when the
// buffer is nearer than the sample by more than `bias` (relative).
Mask cast_shadow_mask(const CameraView& cam, const Eigen::Vector3d& light_dir_camera,
                      double bias = 0.01);

// s(p) = clamp(n . d, 0.2, 1) * (occluded ? 0.3 : 1) with d the dominant
// light direction. Without depth only the attached term is used. Pure
// ambient lighting yields all ones.
Image predict_shadow(const Image& normals, const CameraView* cam,
                     const ShLighting& lighting);

// s_target * albedo * shade(n, L_target) [+ residual] on the foreground,
// sky filled per options, clamped at 0.
Image relight(const Decomposition& d, const ShLighting& target,
              const RelightOptions& options = {}, const CameraView* cam = nullptr);
Image relight(const RelightRequest& req);

struct CycleReport {
  double shading_lab = 0.0;      // mean squared LAB distance of the shading maps
  double normal_mae_deg = 0.0;   // mean angular error
  double albedo_lab = 0.0;       // shading-luminance weighted LAB, per pixel
  double shadow_l1 = 0.0;        // mean |s_hat - s_target|
  DecomposeResult redecomposition;
};

// Decomposes `relit` starting from the original maps and L_target and
// compares the result with the maps that produced it. `target_shadow`
// defaults to the original shadow map.
CycleReport cycle_consistency_report(const Decomposition& original,
                                     const Image& relit, const ShLighting& target,
                                     const OptimizerConfig& cfg,
                                     const Image* target_shadow = nullptr);

}  // namespace relumo
