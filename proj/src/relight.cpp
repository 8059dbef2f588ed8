#include "relumo/relight.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "relumo/color.hpp"
#include "relumo/error.hpp"
#include "relumo/metrics.hpp"
#include "relumo/rotation.hpp"

namespace relumo {

ShadowMode parse_shadow_mode(std::string_view s) {
  if (s == "none") return ShadowMode::None;
  if (s == "geometric") return ShadowMode::Geometric;
  if (s == "keep_original" || s == "keep-original") return ShadowMode::KeepOriginal;
  throw Error("unknown shadow mode '" + std::string(s) + "'");
}

SkyFill parse_sky_fill(std::string_view s) {
  if (s == "black") return SkyFill::Black;
  if (s == "original") return SkyFill::Original;
  if (s == "flat_color" || s == "flat-color") return SkyFill::FlatColor;
  throw Error("unknown sky fill '" + std::string(s) + "'");
}

std::string_view to_string(ShadowMode m) {
  switch (m) {
    case ShadowMode::None: return "none";
    case ShadowMode::Geometric: return "geometric";
    case ShadowMode::KeepOriginal: return "keep_original";
  }
  return "?";
}

std::string_view to_string(SkyFill f) {
  switch (f) {
    case SkyFill::Black: return "black";
    case SkyFill::Original: return "original";
    case SkyFill::FlatColor: return "flat_color";
  }
  return "?";
}

ShLighting resolve_target(const LightingTarget& target) {
  if (const auto* l = std::get_if<ShLighting>(&target)) return *l;
  return fit_envmap_lighting_aligned(std::get<EnvMap>(target));
}

Mask cast_shadow_mask(const CameraView& cam, const Eigen::Vector3d& light_dir_camera,
                      double bias) {
  if (!cam.has_depth()) throw Error("cast_shadow_mask: camera has no depth");
  if (!(light_dir_camera.norm() > 0.0)) throw Error("cast_shadow_mask: zero direction");
  const Eigen::Vector3d dir = light_dir_camera.normalized();
  const Image& depth = cam.depth;
  const int w = depth.width();
  const int h = depth.height();
  const int max_steps = 4 * (w + h);
  const double fx = cam.intrinsics.fx;
  const double fy = cam.intrinsics.fy;
  Mask out(w, h);

#pragma omp parallel for schedule(dynamic, 4)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double z0 = depth.at(x, y);
      if (!(z0 > 0.0)) continue;
      const Eigen::Vector3d p = cam.unproject(x, y, z0);
      double t = 0.0;
      for (int step = 0; step < max_steps; ++step) {
        const Eigen::Vector3d q = p + t * dir;
        const double du = fx * (dir.x() * q.z() - q.x() * dir.z()) / (q.z() * q.z());
        const double dv = fy * (dir.y() * q.z() - q.y() * dir.z()) / (q.z() * q.z());
        const double speed = std::hypot(du, dv);
        if (speed < 1e-12) break;
        t += 0.5 / speed;
        const Eigen::Vector3d r = p + t * dir;
        if (r.z() <= 1e-9) break;
        const Eigen::Vector2d uv = cam.project(r);
        const int sx = static_cast<int>(std::lround(uv.x()));
        const int sy = static_cast<int>(std::lround(uv.y()));
        if (sx < 0 || sy < 0 || sx >= w || sy >= h) break;
        if (std::hypot(uv.x() - x, uv.y() - y) < 1.0) continue;
        const double buffer = depth.at(sx, sy);
        if (buffer > 0.0 && buffer < r.z() * (1.0 - bias)) {
          out.set(x, y, true);
          break;
        }
      }
    }
  return out;
}

Image predict_shadow(const Image& normals, const CameraView* cam,
                     const ShLighting& lighting) {
  if (normals.channels() != 3) throw Error("predict_shadow: 3-channel normals required");
  Image out = normals.like(1, ColorSpace::Scalar, 1.0);
  Eigen::Vector3d d;
  try {
    d = dominant_light_direction(lighting);
  } catch (const NumericalError&) {
    return out;
  }
  Mask cast;
  if (cam && cam->has_depth()) {
    require_same_size(normals, cam->depth, "predict_shadow");
    cast = cast_shadow_mask(*cam, normal_to_camera_frame(d));
  }
  for (std::size_t p = 0; p < out.pixel_count(); ++p) {
    auto n = normals.pixel(p);
    const double cosine = n[0] * d.x() + n[1] * d.y() + n[2] * d.z();
    double s = std::clamp(cosine, kAttachedFloor, 1.0);
    if (!cast.empty() && cast[p]) s *= kCastShadowValue;
    out.pixel(p)[0] = s;
  }
  return out;
}

Image relight(const Decomposition& d, const ShLighting& target,
              const RelightOptions& options, const CameraView* cam) {
  validate(d);
  if (!target.coeffs.allFinite()) throw Error("relight: target lighting not finite");
  Image shadow;
  switch (options.shadow_mode) {
    case ShadowMode::None:
      shadow = d.shadow.like(1, ColorSpace::Scalar, 1.0);
      break;
    case ShadowMode::KeepOriginal:
      shadow = d.shadow;
      break;
    case ShadowMode::Geometric:
      if (options.cast_shadows && !(cam && cam->has_depth()))
        throw Error("relight: geometric cast shadows need a depth map");
      shadow = predict_shadow(d.normals, options.cast_shadows ? cam : nullptr, target);
      break;
  }
  const Image rendering = lambertian(d.albedo, d.normals, shadow, target);
  Image out = options.use_residual ? compose(rendering, d.residual) : rendering;

  const Eigen::Vector3d dc = target.coeffs.col(0).cwiseMax(0.0);
  for (std::size_t p = 0; p < out.pixel_count(); ++p) {
    auto px = out.pixel(p);
    if (!d.mask[p]) {
      for (int c = 0; c < 3; ++c) {
        switch (options.sky_fill) {
          case SkyFill::Black: px[c] = 0.0; break;
          case SkyFill::Original: px[c] = d.residual.pixel(p)[c]; break;
          case SkyFill::FlatColor: px[c] = dc[c]; break;
        }
      }
    }
    for (int c = 0; c < 3; ++c) px[c] = std::max(0.0, px[c]);
  }
  return out;
}

Image relight(const RelightRequest& req) {
  if (!req.decomposition) throw Error("relight: request has no decomposition");
  return relight(*req.decomposition, resolve_target(req.target), req.options,
                 req.camera ? &*req.camera : nullptr);
}

CycleReport cycle_consistency_report(const Decomposition& original,
                                     const Image& relit, const ShLighting& target,
                                     const OptimizerConfig& cfg,
                                     const Image* target_shadow) {
  validate(original);
  require_same_size(relit, original.mask, "cycle_consistency_report");
  const std::size_t n = original.mask.count();
  if (n == 0) throw Error("cycle_consistency_report: empty foreground");
  const Image& s_target = target_shadow ? *target_shadow : original.shadow;
  require_same_size(relit, s_target, "cycle_consistency_report");

  DecomposeInit init;
  init.normals = original.normals;
  init.albedo = original.albedo;
  init.shadow = s_target;
  init.lighting = target;
  CycleReport report;
  report.redecomposition = decompose(relit, original.mask, init, cfg);
  const Decomposition& est = report.redecomposition.decomposition;

  const Image sh_est = shade(est.normals, est.lighting);
  const Image sh_ref = shade(original.normals, target);
  const Image lab_sh_est = rgb_to_lab(sh_est);
  const Image lab_sh_ref = rgb_to_lab(sh_ref);
  const Image lab_a_est = rgb_to_lab(est.albedo);
  const Image lab_a_ref = rgb_to_lab(original.albedo);
  double shading = 0.0, albedo = 0.0, shadow = 0.0;
  for (std::size_t p = 0; p < relit.pixel_count(); ++p) {
    if (!original.mask[p]) continue;
    for (int c = 0; c < 3; ++c) {
      const double ds = lab_sh_est.pixel(p)[c] - lab_sh_ref.pixel(p)[c];
      shading += ds * ds;
    }
    auto r = sh_ref.pixel(p);
    const double weight = luminance(r[0], r[1], r[2]);
    for (int c = 0; c < 3; ++c) {
      const double da = lab_a_est.pixel(p)[c] - lab_a_ref.pixel(p)[c];
      albedo += weight * da * da;
    }
    shadow += std::abs(est.shadow.pixel(p)[0] - s_target.pixel(p)[0]);
  }
  const double count = static_cast<double>(n);
  report.shading_lab = shading / count;
  report.albedo_lab = albedo / count;
  report.shadow_l1 = shadow / count;
  report.normal_mae_deg = mean_angular_error(est.normals, original.normals, original.mask);
  return report;
}

}  // namespace relumo
