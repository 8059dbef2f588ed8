#include "relumo/envmap.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "relumo/error.hpp"
#include "relumo/rotation.hpp"

namespace relumo {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxIrradianceWidth = 128;

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}

struct Texel {
  Eigen::Vector3d dir;
  Eigen::Vector3d weighted;  // radiance * solid angle
};

std::vector<Texel> weighted_texels(const Image& radiance) {
  const int w = radiance.width();
  const int h = radiance.height();
  const double dtheta = kPi / h;
  const double dphi = 2.0 * kPi / w;
  std::vector<Texel> out;
  out.reserve(radiance.pixel_count());
  for (int v = 0; v < h; ++v) {
    const double theta = kPi * (v + 0.5) / h;
    const double omega = std::sin(theta) * dtheta * dphi;
    for (int u = 0; u < w; ++u) {
      auto px = radiance.pixel(u, v);
      if (px[0] == 0.0 && px[1] == 0.0 && px[2] == 0.0) continue;
      out.push_back({envmap_direction(u, v, w, h),
                     omega * Eigen::Vector3d(px[0], px[1], px[2])});
    }
  }
  return out;
}

}  // namespace

void validate(const EnvMap& env) {
  const Image& r = env.radiance;
  if (r.channels() != 3 || r.empty())
    throw Error("env map needs a non-empty 3-channel radiance image");
  if (r.width() != 2 * r.height())
    throw Error("env map must be equirectangular (width = 2 x height)");
  for (double v : r.data())
    if (!std::isfinite(v) || v < 0.0)
      throw Error("env map radiance must be finite and non-negative");
  require_rotation(env.alignment, "env map alignment");
}

Eigen::Vector3d envmap_direction(double u, double v, int width, int height) {
  const double theta = kPi * (v + 0.5) / height;
  const double phi = 2.0 * kPi * (u + 0.5) / width;
  return {std::sin(theta) * std::sin(phi), std::cos(theta),
          std::sin(theta) * std::cos(phi)};
}

Eigen::Vector2d envmap_coords(const Eigen::Vector3d& dir, int width,
                              int height) {
  const Eigen::Vector3d d = dir.normalized();
  const double theta = std::acos(std::clamp(d.y(), -1.0, 1.0));
  double phi = std::atan2(d.x(), d.z());
  if (phi < 0.0) phi += 2.0 * kPi;
  return {phi * width / (2.0 * kPi) - 0.5, theta * height / kPi - 0.5};
}

Image pool_envmap(const Image& radiance, int factor) {
  if (factor < 1) throw Error("pool factor must be >= 1");
  if (factor == 1) return radiance;
  const int w = radiance.width() / factor;
  const int h = radiance.height() / factor;
  Image out(w, h, 3, radiance.space());
  const int src_h = radiance.height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double weight = 0.0;
      Eigen::Vector3d sum = Eigen::Vector3d::Zero();
      for (int dy = 0; dy < factor; ++dy) {
        const int sy = y * factor + dy;
        const double s = std::sin(kPi * (sy + 0.5) / src_h);
        for (int dx = 0; dx < factor; ++dx) {
          auto px = radiance.pixel(x * factor + dx, sy);
          sum += s * Eigen::Vector3d(px[0], px[1], px[2]);
          weight += s;
        }
      }
      // Pooled texel carries the same power over its (new) solid angle.
      const double s_new = std::sin(kPi * (y + 0.5) / h);
      const double scale = s_new > 0.0 ? weight / (factor * factor * s_new) : 0.0;
      const Eigen::Vector3d mean = weight > 0.0 ? Eigen::Vector3d(sum / weight)
                                                : Eigen::Vector3d::Zero();
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = mean[c] * scale;
    }
  return out;
}

std::vector<Eigen::Vector3d> envmap_irradiance(
    const Image& radiance, const std::vector<Eigen::Vector3d>& normals) {
  int factor = 1;
  while (radiance.width() / factor > kMaxIrradianceWidth) factor *= 2;
  const Image pooled = pool_envmap(radiance, factor);
  const std::vector<Texel> texels = weighted_texels(pooled);
  std::vector<Eigen::Vector3d> out(normals.size(), Eigen::Vector3d::Zero());
  const auto count = static_cast<std::ptrdiff_t>(normals.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    Eigen::Vector3d e = Eigen::Vector3d::Zero();
    for (const Texel& t : texels) {
      const double cosine = normals[i].dot(t.dir);
      if (cosine > 0.0) e += cosine * t.weighted;
    }
    out[i] = e;
  }
  return out;
}

ShLighting fit_envmap_lighting(const EnvMap& env, int samples) {
  validate(env);
  if (samples < 1000) throw Error("env-map fit needs at least 1000 normals");
  const auto normals = fibonacci_sphere(samples);
  const auto irradiance = envmap_irradiance(env.radiance, normals);
  Eigen::MatrixXd design(samples, 9);
  Eigen::MatrixXd target(samples, 3);
  for (int k = 0; k < samples; ++k) {
    design.row(k) = sh_basis_unchecked(normals[k]).transpose();
    target.row(k) = irradiance[k].transpose();
  }
  ShLighting out;
  out.coeffs = design.colPivHouseholderQr().solve(target).transpose();
  return out;
}

ShLighting fit_envmap_lighting_aligned(const EnvMap& env, int samples) {
  return rotate_lighting(fit_envmap_lighting(env, samples), env.alignment);
}

EnvMap rotate_envmap(const EnvMap& env, const Eigen::Matrix3d& r) {
  require_rotation(r, "rotate_envmap");
  const Image& src = env.radiance;
  const int w = src.width();
  const int h = src.height();
  EnvMap out{src.like(3, src.space()), env.alignment};
  const Eigen::Matrix3d inv = r.transpose();
#pragma omp parallel for schedule(static)
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const Eigen::Vector2d uv =
          envmap_coords(inv * envmap_direction(u, v, w, h), w, h);
      const double x = snap(uv.x());
      const double y = std::clamp(snap(uv.y()), 0.0, h - 1.0);
      const double xf = std::floor(x);
      const double yf = std::min(std::floor(y), std::max(h - 2.0, 0.0));
      const double fx = x - xf;
      const double fy = y - yf;
      const int x0 = ((static_cast<int>(xf) % w) + w) % w;
      const int x1 = (x0 + 1) % w;
      const int y0 = static_cast<int>(yf);
      const int y1 = std::min(y0 + 1, h - 1);
      for (int c = 0; c < 3; ++c) {
        double value;
        if (fx == 0.0 && fy == 0.0) {
          value = src.at(x0, y0, c);
        } else {
          const double top = (1 - fx) * src.at(x0, y0, c) + fx * src.at(x1, y0, c);
          const double bot = (1 - fx) * src.at(x0, y1, c) + fx * src.at(x1, y1, c);
          value = (1 - fy) * top + fy * bot;
        }
        out.radiance.at(u, v, c) = value;
      }
    }
  return out;
}

}  // namespace relumo
