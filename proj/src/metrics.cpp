#include "relumo/metrics.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>
#include <vector>

#include "relumo/color.hpp"
#include "relumo/error.hpp"

namespace relumo {

namespace {

void check_pair(const Image& a, const Image& b, const Mask& mask, const char* what) {
  require_same_size(a, b, what);
  require_same_size(a, mask, what);
  if (a.channels() != b.channels())
    throw Error(std::string(what) + ": channel counts differ");
  if (mask.count() == 0) throw Error(std::string(what) + ": empty mask");
}

int mirror(int i, int n) {
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
  return i;
}

template <class F>
double masked_mean(const Image& a, const Image& b, const Mask& mask, F f) {
  std::vector<double> rows(a.height(), 0.0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < a.height(); ++y) {
    double acc = 0.0;
    for (int x = 0; x < a.width(); ++x) {
      if (!mask(x, y)) continue;
      for (int c = 0; c < a.channels(); ++c) acc += f(a.at(x, y, c) - b.at(x, y, c));
    }
    rows[y] = acc;
  }
  double total = 0.0;
  for (double r : rows) total += r;
  return total / (static_cast<double>(mask.count()) * a.channels());
}

}  // namespace

double masked_l1(const Image& a, const Image& b, const Mask& mask) {
  check_pair(a, b, mask, "masked_l1");
  return masked_mean(a, b, mask, [](double d) { return std::abs(d); });
}

double masked_mse(const Image& a, const Image& b, const Mask& mask) {
  check_pair(a, b, mask, "masked_mse");
  return masked_mean(a, b, mask, [](double d) { return d * d; });
}

double ssim(const Image& a, const Image& b, const Mask& mask,
            const SsimOptions& options) {
  check_pair(a, b, mask, "ssim");
  if (options.window < 1 || options.window % 2 == 0)
    throw Error("ssim: window size must be odd");
  if (a.width() < options.window || a.height() < options.window)
    throw Error("ssim: image smaller than the window");
  const Image la = to_luminance(a);
  const Image lb = to_luminance(b);
  const int w = a.width();
  const int h = a.height();
  const int r = options.window / 2;

  std::vector<double> kernel(options.window);
  for (int i = -r; i <= r; ++i)
    kernel[i + r] = std::exp(-(i * i) / (2.0 * options.sigma * options.sigma));

  // Six masked moment images: m, m a, m b, m a^2, m b^2, m a b.
  constexpr int kMoments = 6;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<double> src(n * kMoments), tmp(n * kMoments), dst(n * kMoments);
  for (std::size_t p = 0; p < n; ++p) {
    const double m = mask[p] ? 1.0 : 0.0;
    const double va = la.pixel(p)[0];
    const double vb = lb.pixel(p)[0];
    double* s = &src[p * kMoments];
    s[0] = m;
    s[1] = m * va;
    s[2] = m * vb;
    s[3] = m * va * va;
    s[4] = m * vb * vb;
    s[5] = m * va * vb;
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc[kMoments] = {};
      for (int k = -r; k <= r; ++k) {
        const double* s = &src[(static_cast<std::size_t>(y) * w + mirror(x + k, w)) * kMoments];
        for (int j = 0; j < kMoments; ++j) acc[j] += kernel[k + r] * s[j];
      }
      std::copy(acc, acc + kMoments, &tmp[(static_cast<std::size_t>(y) * w + x) * kMoments]);
    }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc[kMoments] = {};
      for (int k = -r; k <= r; ++k) {
        const double* s = &tmp[(static_cast<std::size_t>(mirror(y + k, h)) * w + x) * kMoments];
        for (int j = 0; j < kMoments; ++j) acc[j] += kernel[k + r] * s[j];
      }
      std::copy(acc, acc + kMoments, &dst[(static_cast<std::size_t>(y) * w + x) * kMoments]);
    }

  const double c1 = std::pow(options.k1 * options.dynamic_range, 2);
  const double c2 = std::pow(options.k2 * options.dynamic_range, 2);
  std::vector<double> rows(h, 0.0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    double acc = 0.0;
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      const double* m = &dst[(static_cast<std::size_t>(y) * w + x) * kMoments];
      const double mu_a = m[1] / m[0];
      const double mu_b = m[2] / m[0];
      const double var_a = m[3] / m[0] - mu_a * mu_a;
      const double var_b = m[4] / m[0] - mu_b * mu_b;
      const double cov = m[5] / m[0] - mu_a * mu_b;
      acc += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
             ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
    }
    rows[y] = acc;
  }
  double total = 0.0;
  for (double v : rows) total += v;
  return total / static_cast<double>(mask.count());
}

double mean_angular_error(const Image& n1, const Image& n2, const Mask& mask) {
  check_pair(n1, n2, mask, "mean_angular_error");
  if (n1.channels() != 3) throw Error("mean_angular_error: 3-channel normals required");
  double total = 0.0;
  for (std::size_t p = 0; p < n1.pixel_count(); ++p) {
    if (!mask[p]) continue;
    const Eigen::Vector3d a(n1.pixel(p)[0], n1.pixel(p)[1], n1.pixel(p)[2]);
    const Eigen::Vector3d b(n2.pixel(p)[0], n2.pixel(p)[1], n2.pixel(p)[2]);
    total += std::atan2(a.cross(b).norm(), a.dot(b));
  }
  return total / static_cast<double>(mask.count()) * 180.0 / std::numbers::pi;
}

EvalReport evaluate_pair(const Image& estimate, const Image& reference,
                         const Mask& mask, const Image* normals_estimate,
                         const Image* normals_reference) {
  EvalReport r;
  r.l1 = masked_l1(estimate, reference, mask);
  r.mse = masked_mse(estimate, reference, mask);
  r.ssim = ssim(estimate, reference, mask);
  r.dssim = dssim_from_ssim(r.ssim);
  if (normals_estimate && normals_reference)
    r.mae_normals = mean_angular_error(*normals_estimate, *normals_reference, mask);
  r.pixel_count = mask.count();
  return r;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j = {{"l1", r.l1},
                      {"mse", r.mse},
                      {"ssim", r.ssim},
                      {"dssim", r.dssim},
                      {"pixel_count", r.pixel_count},
                      {"ssim_convention", r.ssim_convention}};
  j["mae_normals"] = r.mae_normals ? nlohmann::json(*r.mae_normals) : nlohmann::json();
  return j;
}

}  // namespace relumo
