#include <algorithm>
#include <cmath>

#include "relumo/error.hpp"
#include "relumo/reference.hpp"

namespace relumo::reference {

namespace {

double basis_dot(const ShLighting& l, int c, double x, double y, double z) {
  const double b[9] = {1.0,   y,         z,     x,    x * y,
                       y * z, 3 * z * z - 1, x * z, x * x - y * y};
  double s = 0.0;
  for (int j = 0; j < 9; ++j) s += l.coeffs(c, j) * b[j];
  return s;
}

double luma(const Image& img, int x, int y) {
  if (img.channels() == 1) return img.at(x, y);
  return 0.2126 * img.at(x, y, 0) + 0.7152 * img.at(x, y, 1) + 0.0722 * img.at(x, y, 2);
}

int reflect(int i, int n) {
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
  return i;
}

}  // namespace

Image shade(const Image& normals, const ShLighting& lighting) {
  Image out(normals.width(), normals.height(), 3, ColorSpace::LinearRGB);
  for (int y = 0; y < normals.height(); ++y)
    for (int x = 0; x < normals.width(); ++x)
      for (int c = 0; c < 3; ++c)
        out.at(x, y, c) = std::max(
            0.0, basis_dot(lighting, c, normals.at(x, y, 0), normals.at(x, y, 1),
                           normals.at(x, y, 2)));
  return out;
}

Image downscale(const Image& img, int factor) {
  if (factor < 1) throw Error("downscale factor must be >= 1");
  const int w = img.width() / factor;
  const int h = img.height() / factor;
  Image out(w, h, img.channels(), img.space());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < img.channels(); ++c) {
        double sum = 0.0;
        for (int yy = y * factor; yy < (y + 1) * factor; ++yy)
          for (int xx = x * factor; xx < (x + 1) * factor; ++xx) sum += img.at(xx, yy, c);
        out.at(x, y, c) = sum / (factor * factor);
      }
  return out;
}

MaskedImage downscale(const Image& img, const Mask& mask, int factor) {
  if (factor < 1) throw Error("downscale factor must be >= 1");
  const int w = img.width() / factor;
  const int h = img.height() / factor;
  MaskedImage out{Image(w, h, img.channels(), img.space()), Mask(w, h)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int n = 0;
      for (int yy = y * factor; yy < (y + 1) * factor; ++yy)
        for (int xx = x * factor; xx < (x + 1) * factor; ++xx) n += mask(xx, yy);
      if (n == 0) continue;
      out.mask.set(x, y, true);
      for (int c = 0; c < img.channels(); ++c) {
        double sum = 0.0;
        for (int yy = y * factor; yy < (y + 1) * factor; ++yy)
          for (int xx = x * factor; xx < (x + 1) * factor; ++xx)
            if (mask(xx, yy)) sum += img.at(xx, yy, c);
        out.image.at(x, y, c) = sum / n;
      }
    }
  return out;
}

double appearance_loss(const Image& img, const Decomposition& d) {
  double total = 0.0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      if (!d.mask(x, y)) continue;
      const double s = std::max(d.shadow.at(x, y), 1e-3);
      for (int c = 0; c < 3; ++c) {
        const double target = std::min(1.0, img.at(x, y, c) / s);
        const double model =
            d.albedo.at(x, y, c) * basis_dot(d.lighting, c, d.normals.at(x, y, 0),
                                             d.normals.at(x, y, 1), d.normals.at(x, y, 2));
        total += (target - model) * (target - model);
      }
    }
  return total;
}

double ssim(const Image& a, const Image& b, const Mask& mask, const SsimOptions& o) {
  const int w = a.width();
  const int h = a.height();
  if (w < o.window || h < o.window) throw Error("ssim: image smaller than the window");
  const int r = o.window / 2;
  const double c1 = (o.k1 * o.dynamic_range) * (o.k1 * o.dynamic_range);
  const double c2 = (o.k2 * o.dynamic_range) * (o.k2 * o.dynamic_range);
  double total = 0.0;
  std::size_t centres = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      double sw = 0, sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = reflect(x + dx, w);
          const int yy = reflect(y + dy, h);
          if (!mask(xx, yy)) continue;
          const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * o.sigma * o.sigma));
          const double va = luma(a, xx, yy);
          const double vb = luma(b, xx, yy);
          sw += g;
          sa += g * va;
          sb += g * vb;
          saa += g * va * va;
          sbb += g * vb * vb;
          sab += g * va * vb;
        }
      const double ma = sa / sw, mb = sb / sw;
      const double va = saa / sw - ma * ma, vb = sbb / sw - mb * mb;
      const double cov = sab / sw - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++centres;
    }
  if (centres == 0) throw Error("ssim: empty mask");
  return total / centres;
}

Projection cross_project(const Image& src, const CameraView& src_cam,
                         const CameraView& dst_cam, const CrossProjectOptions& options) {
  if (!dst_cam.has_depth()) throw Error("cross_project: missing depth for the destination view");
  const int w = dst_cam.depth.width();
  const int h = dst_cam.depth.height();
  Projection out{Image(w, h, src.channels(), src.space()), Mask(w, h)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double z = dst_cam.depth.at(x, y);
      if (!(z > 0.0)) continue;
      const Eigen::Vector3d world = dst_cam.to_world(dst_cam.unproject(x, y, z));
      const Eigen::Vector3d p = src_cam.to_camera(world);
      if (!(p.z() > 0.0)) continue;
      Eigen::Vector2d uv = src_cam.project(p);
      for (int k = 0; k < 2; ++k) {
        const double r = std::round(uv[k]);
        if (std::abs(uv[k] - r) < 1e-9) uv[k] = r;
      }
      if (uv.x() < 0 || uv.y() < 0 || uv.x() > src.width() - 1 || uv.y() > src.height() - 1)
        continue;
      if (src_cam.has_depth()) {
        const int sx = std::clamp(static_cast<int>(std::lround(uv.x())), 0, src.width() - 1);
        const int sy = std::clamp(static_cast<int>(std::lround(uv.y())), 0, src.height() - 1);
        const double sd = src_cam.depth.at(sx, sy);
        if (!(sd > 0.0) || std::abs(p.z() - sd) >= options.depth_tolerance * p.z()) continue;
      }
      const int x0 = std::min(static_cast<int>(std::floor(uv.x())), src.width() - 1);
      const int y0 = std::min(static_cast<int>(std::floor(uv.y())), src.height() - 1);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const int y1 = std::min(y0 + 1, src.height() - 1);
      const double fx = uv.x() - x0, fy = uv.y() - y0;
      for (int c = 0; c < src.channels(); ++c)
        out.image.at(x, y, c) =
            (1 - fy) * ((1 - fx) * src.at(x0, y0, c) + fx * src.at(x1, y0, c)) +
            fy * ((1 - fx) * src.at(x0, y1, c) + fx * src.at(x1, y1, c));
      out.mask.set(x, y, true);
    }
  return out;
}

}  // namespace relumo::reference
