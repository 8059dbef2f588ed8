#pragma once

#include <Eigen/Core>

#include "relumo/camera.hpp"
#include "relumo/decomposition.hpp"
#include "relumo/image.hpp"
#include "relumo/sh.hpp"

namespace relumo {

inline constexpr double kShadowEpsilon = 1e-3;
inline constexpr int kCrossRenderDownscale = 4;

// Gradients of a loss with respect to the decomposition layers. Entries
// outside the loss support are zero. `normals` holds d loss / d n for the
// raw 3-vector (the basis polynomial extended off the sphere).
struct LayerGradient {
  Image albedo;    // 3 channels
  Image normals;   // 3 channels
  Image shadow;    // 1 channel
  Eigen::Matrix<double, 3, 9> lighting = Eigen::Matrix<double, 3, 9>::Zero();
};

struct LossValue {
  double value = 0.0;
  LayerGradient gradient;  // empty images when gradients were not requested
};

// Shadow-free appearance loss over d.mask:
//   sum_p sum_c ( min(1, i_c(p) / max(s(p), eps)) - albedo_c(p) (L_c b(n(p))) )^2
// with eps = 1e-3. The min is taken per channel. Throws on an empty mask.
LossValue appearance_loss(const Image& img, const Decomposition& d,
                          bool with_gradient = true);

// Charbonnier total variation of the albedo over horizontally and
// vertically adjacent foreground pairs: sum sqrt(diff^2 + eps^2) - eps.
LossValue albedo_tv_loss(const Image& albedo, const Mask& mask, double eps,
                         bool with_gradient = true);

// sum_p (1 - s(p))^2 over the mask.
LossValue shadow_prior_loss(const Image& shadow, const Mask& mask,
                            bool with_gradient = true);

// sum_p || LAB(rgb(p)) - target_lab(p) ||^2 over `mask`, with gradient
// d/d rgb. LAB conversion clips to [0,1] first.
struct LabLoss {
  double value = 0.0;
  Image gradient;  // 3 channels; empty when not requested
};
LabLoss lab_l2_loss(const Image& rgb, const Image& target_lab, const Mask& mask,
                    bool with_gradient = true);

// The two calibrated views involved in a cross-view loss: `a` is the view
// whose decomposition is being scored, `b` the view supplying the target.
struct ViewPair {
  CameraView a;
  CameraView b;
  CrossProjectOptions options;
};

// Precomputed, parameter-independent half of the albedo-consistency term:
// LAB of view b's albedo warped into view a, and the co-visible pixels.
struct AlbedoTarget {
  Image target_lab;
  Mask pixels;
};
AlbedoTarget make_albedo_target(const Decomposition& a, const Decomposition& b,
                                const ViewPair& views);

// Precomputed half of the cross-render term: view b's shadow-free image
// min(1, i_b / s_b) warped into view a, block-averaged by 4 over co-visible
// pixels and converted to LAB; plus b's lighting rotated into a's frame.
struct CrossRenderTarget {
  Image target_lab;  // downscaled grid
  Mask blocks;       // valid downscaled blocks
  Mask pixels;       // full-resolution co-visible pixels
  ShLighting lighting;
};
CrossRenderTarget make_cross_render_target(const Decomposition& a,
                                           const Image& view_b_img,
                                           const Image& view_b_shadow,
                                           const Mask& view_b_mask,
                                           const ShLighting& lighting_b,
                                           const Eigen::Matrix3d& r_ab,
                                           const ViewPair& views);

// LAB l2 between albedo_a and the warped albedo of b over co-visible pixels.
// Throws "no co-visible pixels" when the overlap is empty.
LossValue albedo_consistency_term(const Image& albedo, const AlbedoTarget& target,
                                  bool with_gradient = true);
double albedo_consistency_loss(const Decomposition& a, const Decomposition& b,
                               const ViewPair& views);

// LAB l2 between the downscaled rendering albedo_a * shade(n_a, L_b->a) and
// the target, over valid blocks. Gradients flow to albedo and normals.
LossValue cross_render_term(const Image& albedo, const Image& normals,
                            const CrossRenderTarget& target,
                            bool with_gradient = true);
// r_ab is the camera-frame relative rotation (relative_rotation(a, b)).
double cross_render_loss(const Decomposition& a, const Image& view_b_img,
                         const Image& view_b_shadow, const Mask& view_b_mask,
                         const ShLighting& lighting_b,
                         const Eigen::Matrix3d& r_ab, const ViewPair& views);

}  // namespace relumo
