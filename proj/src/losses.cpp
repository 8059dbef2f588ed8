#include "relumo/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "relumo/color.hpp"
#include "relumo/error.hpp"
#include "relumo/resample.hpp"
#include "relumo/rotation.hpp"

namespace relumo {

namespace {

using Mat39 = Eigen::Matrix<double, 3, 9>;

double sum_rows(const std::vector<double>& rows) {
  double total = 0.0;
  for (double r : rows) total += r;
  return total;
}

Mat39 sum_rows(const std::vector<Mat39>& rows) {
  Mat39 total = Mat39::Zero();
  for (const auto& r : rows) total += r;
  return total;
}

Eigen::Vector3d vec3(std::span<const double> v) { return {v[0], v[1], v[2]}; }

void require_nonempty(const Mask& m, const char* what) {
  if (m.count() == 0) throw NoOverlapError(std::string(what) + ": no co-visible pixels");
}

}  // namespace

LossValue appearance_loss(const Image& img, const Decomposition& d,
                          bool with_gradient) {
  require_same_size(img, d.albedo, "appearance_loss");
  require_same_size(img, d.normals, "appearance_loss");
  require_same_size(img, d.shadow, "appearance_loss");
  require_same_size(img, d.mask, "appearance_loss");
  if (d.mask.count() == 0) throw Error("appearance_loss: empty mask");

  const int w = img.width();
  const int h = img.height();
  LossValue out;
  if (with_gradient) {
    out.gradient.albedo = img.like(3, ColorSpace::Scalar);
    out.gradient.normals = img.like(3, ColorSpace::Scalar);
    out.gradient.shadow = img.like(1, ColorSpace::Scalar);
  }
  std::vector<double> row_loss(h, 0.0);
  std::vector<Mat39> row_light(with_gradient ? h : 0, Mat39::Zero());
  const Mat39& L = d.lighting.coeffs;

#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    double acc = 0.0;
    for (int x = 0; x < w; ++x) {
      if (!d.mask(x, y)) continue;
      const Eigen::Vector3d n = vec3(d.normals.pixel(x, y));
      const ShBasis b = sh_basis_unchecked(n);
      const Eigen::Vector3d sh = L * b;
      const double s_raw = d.shadow.at(x, y);
      const bool s_clamped = s_raw < kShadowEpsilon;
      const double s = s_clamped ? kShadowEpsilon : s_raw;
      auto px = img.pixel(x, y);
      auto a = d.albedo.pixel(x, y);
      Eigen::Vector3d e;
      double ds = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double ratio = px[c] / s;
        const double t = std::min(1.0, ratio);
        e[c] = t - a[c] * sh[c];
        acc += e[c] * e[c];
        if (with_gradient && ratio < 1.0 && !s_clamped)
          ds += 2.0 * e[c] * (-px[c] / (s * s));
      }
      if (!with_gradient) continue;
      Eigen::Vector3d dn = Eigen::Vector3d::Zero();
      const ShBasisJacobian jb = sh_basis_jacobian(n);
      for (int c = 0; c < 3; ++c) {
        out.gradient.albedo.at(x, y, c) = -2.0 * e[c] * sh[c];
        const double k = -2.0 * e[c] * a[c];
        row_light[y].row(c) += k * b.transpose();
        dn += k * (L.row(c) * jb).transpose();
      }
      for (int c = 0; c < 3; ++c) out.gradient.normals.at(x, y, c) = dn[c];
      out.gradient.shadow.at(x, y) = ds;
    }
    row_loss[y] = acc;
  }
  out.value = sum_rows(row_loss);
  if (with_gradient) out.gradient.lighting = sum_rows(row_light);
  return out;
}

LossValue albedo_tv_loss(const Image& albedo, const Mask& mask, double eps,
                         bool with_gradient) {
  require_same_size(albedo, mask, "albedo_tv_loss");
  if (!(eps > 0.0)) throw Error("albedo_tv_loss: eps must be positive");
  const int w = albedo.width();
  const int h = albedo.height();
  const int ch = albedo.channels();
  LossValue out;
  if (with_gradient) out.gradient.albedo = albedo.like(ch, ColorSpace::Scalar);
  std::vector<double> row_loss(h, 0.0);
  // Each pair contributes to the gradient of both ends; splitting the loop
  // into a per-pixel gather keeps the writes race free.
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    double acc = 0.0;
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      const bool right = x + 1 < w && mask(x + 1, y);
      const bool down = y + 1 < h && mask(x, y + 1);
      for (int c = 0; c < ch; ++c) {
        if (right) {
          const double diff = albedo.at(x + 1, y, c) - albedo.at(x, y, c);
          acc += std::sqrt(diff * diff + eps * eps) - eps;
        }
        if (down) {
          const double diff = albedo.at(x, y + 1, c) - albedo.at(x, y, c);
          acc += std::sqrt(diff * diff + eps * eps) - eps;
        }
        if (!with_gradient) continue;
        double g = 0.0;
        const int nx[4] = {x + 1, x - 1, x, x};
        const int ny[4] = {y, y, y + 1, y - 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
          if (!mask(nx[k], ny[k])) continue;
          const double diff = albedo.at(x, y, c) - albedo.at(nx[k], ny[k], c);
          g += diff / std::sqrt(diff * diff + eps * eps);
        }
        out.gradient.albedo.at(x, y, c) = g;
      }
    }
    row_loss[y] = acc;
  }
  out.value = sum_rows(row_loss);
  return out;
}

LossValue shadow_prior_loss(const Image& shadow, const Mask& mask,
                            bool with_gradient) {
  require_same_size(shadow, mask, "shadow_prior_loss");
  LossValue out;
  if (with_gradient) out.gradient.shadow = shadow.like(1, ColorSpace::Scalar);
  std::vector<double> row_loss(shadow.height(), 0.0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < shadow.height(); ++y) {
    double acc = 0.0;
    for (int x = 0; x < shadow.width(); ++x) {
      if (!mask(x, y)) continue;
      const double r = 1.0 - shadow.at(x, y);
      acc += r * r;
      if (with_gradient) out.gradient.shadow.at(x, y) = -2.0 * r;
    }
    row_loss[y] = acc;
  }
  out.value = sum_rows(row_loss);
  return out;
}

LabLoss lab_l2_loss(const Image& rgb, const Image& target_lab, const Mask& mask,
                    bool with_gradient) {
  require_same_size(rgb, target_lab, "lab_l2_loss");
  require_same_size(rgb, mask, "lab_l2_loss");
  if (rgb.channels() != 3 || target_lab.channels() != 3)
    throw Error("lab_l2_loss: 3-channel images required");
  LabLoss out;
  if (with_gradient) out.gradient = rgb.like(3, ColorSpace::Scalar);
  std::vector<double> row_loss(rgb.height(), 0.0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < rgb.height(); ++y) {
    double acc = 0.0;
    for (int x = 0; x < rgb.width(); ++x) {
      if (!mask(x, y)) continue;
      const Eigen::Vector3d c = vec3(rgb.pixel(x, y));
      const Eigen::Vector3d e = linear_rgb_to_lab(c) - vec3(target_lab.pixel(x, y));
      acc += e.squaredNorm();
      if (!with_gradient) continue;
      const Eigen::Vector3d g = 2.0 * lab_jacobian(c).transpose() * e;
      for (int k = 0; k < 3; ++k) out.gradient.at(x, y, k) = g[k];
    }
    row_loss[y] = acc;
  }
  out.value = sum_rows(row_loss);
  return out;
}

namespace {

// Pixels of a whose warp into b lands on b's foreground and passes the
// depth gate.
Mask covisible(const Decomposition& a, const Mask& mask_b, const Mask& warp_valid,
               const ViewPair& views) {
  const Projection pm =
      cross_project(mask_to_image(mask_b), views.b, views.a, views.options);
  Mask out(a.mask.width(), a.mask.height());
  for (std::size_t p = 0; p < out.pixel_count(); ++p)
    out.set(p, a.mask[p] && warp_valid[p] && pm.mask[p] &&
                   pm.image.pixel(p)[0] > 0.999);
  return out;
}

}  // namespace

AlbedoTarget make_albedo_target(const Decomposition& a, const Decomposition& b,
                                const ViewPair& views) {
  const Projection proj =
      cross_project(b.albedo.with_space(ColorSpace::LinearRGB), views.b, views.a,
                    views.options);
  require_same_size(a.albedo, proj.image, "albedo_consistency");
  AlbedoTarget t{rgb_to_lab(proj.image), covisible(a, b.mask, proj.mask, views)};
  require_nonempty(t.pixels, "albedo_consistency");
  return t;
}

LossValue albedo_consistency_term(const Image& albedo, const AlbedoTarget& target,
                                  bool with_gradient) {
  require_nonempty(target.pixels, "albedo_consistency");
  LabLoss l = lab_l2_loss(albedo, target.target_lab, target.pixels, with_gradient);
  LossValue out;
  out.value = l.value;
  out.gradient.albedo = std::move(l.gradient);
  return out;
}

double albedo_consistency_loss(const Decomposition& a, const Decomposition& b,
                               const ViewPair& views) {
  return albedo_consistency_term(a.albedo, make_albedo_target(a, b, views), false)
      .value;
}

CrossRenderTarget make_cross_render_target(const Decomposition& a,
                                           const Image& view_b_img,
                                           const Image& view_b_shadow,
                                           const Mask& view_b_mask,
                                           const ShLighting& lighting_b,
                                           const Eigen::Matrix3d& r_ab,
                                           const ViewPair& views) {
  require_same_size(view_b_img, view_b_shadow, "cross_render");
  require_same_size(view_b_img, view_b_mask, "cross_render");
  if (view_b_img.channels() != 3) throw Error("cross_render: RGB image required");
  Image free_b = view_b_img.like(3, ColorSpace::LinearRGB);
  for (std::size_t p = 0; p < free_b.pixel_count(); ++p) {
    const double s = std::max(view_b_shadow.pixel(p)[0], kShadowEpsilon);
    for (int c = 0; c < 3; ++c)
      free_b.pixel(p)[c] = std::min(1.0, view_b_img.pixel(p)[c] / s);
  }
  const Projection proj = cross_project(free_b, views.b, views.a, views.options);
  require_same_size(a.albedo, proj.image, "cross_render");

  CrossRenderTarget t;
  t.pixels = covisible(a, view_b_mask, proj.mask, views);
  require_nonempty(t.pixels, "cross_render");
  MaskedImage small = downscale(proj.image, t.pixels, kCrossRenderDownscale);
  t.blocks = small.mask;
  require_nonempty(t.blocks, "cross_render");
  t.target_lab = rgb_to_lab(small.image.with_space(ColorSpace::LinearRGB));
  t.lighting = rotate_lighting(lighting_b, camera_rotation_to_normal_frame(r_ab));
  return t;
}

LossValue cross_render_term(const Image& albedo, const Image& normals,
                            const CrossRenderTarget& target, bool with_gradient) {
  require_same_size(albedo, normals, "cross_render");
  require_same_size(albedo, target.pixels, "cross_render");
  require_nonempty(target.blocks, "cross_render");
  constexpr int f = kCrossRenderDownscale;
  const int bw = target.blocks.width();
  const int bh = target.blocks.height();
  const Mat39& L = target.lighting.coeffs;

  // Block-averaged rendering over co-visible pixels.
  Image small(bw, bh, 3, ColorSpace::Scalar);
  Image counts(bw, bh, 1, ColorSpace::Scalar);
#pragma omp parallel for schedule(static)
  for (int by = 0; by < bh; ++by)
    for (int bx = 0; bx < bw; ++bx) {
      if (!target.blocks(bx, by)) continue;
      Eigen::Vector3d sum = Eigen::Vector3d::Zero();
      int n = 0;
      for (int y = by * f; y < (by + 1) * f; ++y)
        for (int x = bx * f; x < (bx + 1) * f; ++x) {
          if (!target.pixels(x, y)) continue;
          const Eigen::Vector3d sh = L * sh_basis_unchecked(vec3(normals.pixel(x, y)));
          sum += vec3(albedo.pixel(x, y)).cwiseProduct(sh);
          ++n;
        }
      sum /= n;
      for (int c = 0; c < 3; ++c) small.at(bx, by, c) = sum[c];
      counts.at(bx, by) = n;
    }

  LabLoss l = lab_l2_loss(small, target.target_lab, target.blocks, with_gradient);
  LossValue out;
  out.value = l.value;
  if (!with_gradient) return out;

  out.gradient.albedo = albedo.like(3, ColorSpace::Scalar);
  out.gradient.normals = albedo.like(3, ColorSpace::Scalar);
#pragma omp parallel for schedule(static)
  for (int by = 0; by < bh; ++by)
    for (int bx = 0; bx < bw; ++bx) {
      if (!target.blocks(bx, by)) continue;
      const Eigen::Vector3d g = vec3(l.gradient.pixel(bx, by)) / counts.at(bx, by);
      for (int y = by * f; y < (by + 1) * f; ++y)
        for (int x = bx * f; x < (bx + 1) * f; ++x) {
          if (!target.pixels(x, y)) continue;
          const Eigen::Vector3d n = vec3(normals.pixel(x, y));
          const Eigen::Vector3d sh = L * sh_basis_unchecked(n);
          const ShBasisJacobian jb = sh_basis_jacobian(n);
          Eigen::Vector3d dn = Eigen::Vector3d::Zero();
          for (int c = 0; c < 3; ++c) {
            out.gradient.albedo.at(x, y, c) = g[c] * sh[c];
            dn += g[c] * albedo.at(x, y, c) * (L.row(c) * jb).transpose();
          }
          for (int c = 0; c < 3; ++c) out.gradient.normals.at(x, y, c) = dn[c];
        }
    }
  return out;
}

double cross_render_loss(const Decomposition& a, const Image& view_b_img,
                         const Image& view_b_shadow, const Mask& view_b_mask,
                         const ShLighting& lighting_b,
                         const Eigen::Matrix3d& r_ab, const ViewPair& views) {
  const CrossRenderTarget t = make_cross_render_target(
      a, view_b_img, view_b_shadow, view_b_mask, lighting_b, r_ab, views);
  return cross_render_term(a.albedo, a.normals, t, false).value;
}

}  // namespace relumo
