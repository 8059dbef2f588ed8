#include "relumo/resample.hpp"

#include <algorithm>
#include <cmath>

#include "relumo/error.hpp"

namespace relumo {

namespace {

// Sub-nanopixel slack absorbs round-off in coordinates produced by chained
// projections, so an exact integer lookup stays exact and border pixels of
// an identity warp stay in bounds.
constexpr double kSnap = 1e-9;

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < kSnap ? r : v;
}

}  // namespace

Image downscale(const Image& img, int factor) {
  if (factor < 1) throw Error("downscale factor must be >= 1");
  if (factor == 1) return img;
  const int w = img.width() / factor;
  const int h = img.height() / factor;
  const int ch = img.channels();
  Image out(w, h, ch, img.space());
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double sum = 0.0;
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx)
            sum += img.at(x * factor + dx, y * factor + dy, c);
        out.at(x, y, c) = sum * inv;
      }
  return out;
}

MaskedImage downscale(const Image& img, const Mask& mask, int factor) {
  if (factor < 1) throw Error("downscale factor must be >= 1");
  require_same_size(img, mask, "downscale");
  const int w = img.width() / factor;
  const int h = img.height() / factor;
  const int ch = img.channels();
  MaskedImage out{Image(w, h, ch, img.space()), Mask(w, h)};
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int count = 0;
      for (int dy = 0; dy < factor; ++dy)
        for (int dx = 0; dx < factor; ++dx) {
          const int sx = x * factor + dx;
          const int sy = y * factor + dy;
          if (!mask(sx, sy)) continue;
          ++count;
          for (int c = 0; c < ch; ++c) out.image.at(x, y, c) += img.at(sx, sy, c);
        }
      if (count > 0) {
        for (int c = 0; c < ch; ++c) out.image.at(x, y, c) /= count;
        out.mask.set(x, y, true);
      }
    }
  return out;
}

bool sample_bilinear(const Image& img, double x, double y,
                     std::span<double> out) {
  const int w = img.width();
  const int h = img.height();
  x = snap(x);
  y = snap(y);
  if (!(x >= 0.0 && y >= 0.0 && x <= w - 1 && y <= h - 1)) return false;
  const int x0 = std::min(static_cast<int>(x), std::max(w - 2, 0));
  const int y0 = std::min(static_cast<int>(y), std::max(h - 2, 0));
  const double fx = x - x0;
  const double fy = y - y0;
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  for (int c = 0; c < img.channels(); ++c) {
    if (fx == 0.0 && fy == 0.0) {
      out[c] = img.at(x0, y0, c);
      continue;
    }
    const double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
    const double bot = (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
    out[c] = (1.0 - fy) * top + fy * bot;
  }
  return true;
}

}  // namespace relumo
