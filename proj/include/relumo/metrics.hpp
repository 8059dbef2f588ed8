#pragma once

#include <json.hpp>
#include <optional>
#include <string>

#include "relumo/image.hpp"

namespace relumo {

// Mean over mask pixels and channels. Throw on an empty mask.
double masked_l1(const Image& a, const Image& b, const Mask& mask);
double masked_mse(const Image& a, const Image& b, const Mask& mask);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

// Mean local SSIM of the luminance images over window centres in `mask`.
// Window statistics use only in-mask pixels (Gaussian weights renormalised);
// samples past the image border are mirrored (x = -1 reads x = 0). Throws
// when the image is smaller than the window.
double ssim(const Image& a, const Image& b, const Mask& mask,
            const SsimOptions& options = {});
inline double dssim_from_ssim(double s) { return (1.0 - s) / 2.0; }

// Mean angle between unit normals in degrees. Angles use
// atan2(|n1 x n2|, n1 . n2), which equals arccos(clamp(n1 . n2)) but stays
// accurate for nearly parallel vectors.
double mean_angular_error(const Image& n1, const Image& n2, const Mask& mask);

inline constexpr const char* kSsimConvention =
    "luminance(linear RGB), gaussian 11x11 sigma 1.5, K1 0.01, K2 0.03, L 1, "
    "mask-renormalised windows, mirrored borders";

struct EvalReport {
  double l1 = 0.0;
  double mse = 0.0;
  double ssim = 0.0;
  double dssim = 0.0;
  std::optional<double> mae_normals;
  std::size_t pixel_count = 0;
  std::string ssim_convention = kSsimConvention;
};

EvalReport evaluate_pair(const Image& estimate, const Image& reference,
                         const Mask& mask, const Image* normals_estimate = nullptr,
                         const Image* normals_reference = nullptr);
nlohmann::json to_json(const EvalReport& r);

}  // namespace relumo
