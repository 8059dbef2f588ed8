#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relumo/camera.hpp"
#include "relumo/decomposition.hpp"
#include "relumo/losses.hpp"
#include "relumo/sh.hpp"

namespace relumo {

struct LossWeights {
  double appearance = 1.0;
  double albedo_consistency = 0.5;
  double cross_render = 0.5;
  double albedo_smoothness = 0.0;  // lambda_alpha, Charbonnier TV
  double shadow_prior = 0.0;       // lambda_s, sum (1 - s)^2
};

struct OptimizerConfig {
  int iterations = 2000;
  double learning_rate = 1e-2;
  double decay = 0.5;
  int decay_every = 500;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // Stop when the step multiplier falls below this (no improving step left).
  double min_step_scale = 1e-6;
  // Stop when the relative decrease over `patience` iterations is below tol.
  double tolerance = 0.0;
  int patience = 100;
  double tv_epsilon = 1e-3;
  // LAB distances are O(100) per pixel; scaled into the objective by this.
  double lab_scale = 1e-4;
  LossWeights weights;
  bool optimize_albedo = true;
  bool optimize_normals = true;
  bool optimize_shadow = true;
  bool optimize_lighting = true;
  // Report estimated lighting (no subspace) scaled to mean foreground
  // shading luminance 1, with the albedo scaled the other way.
  bool fix_gauge = true;
  const ShSubspace* subspace = nullptr;
  // Single-view runs first solve at 1/2, 1/4, ... resolution and start each
  // finer level from the upsampled layers, which lets a region darkened as a
  // whole move into the shadow channel instead of being stuck in the albedo
  // by the TV term. Ignored with neighbours; levels stop below 16 px.
  int pyramid_levels = 1;
  std::uint64_t seed = 0;  // recorded in manifests; the optimiser is deterministic
};

void validate(const OptimizerConfig& cfg);

// Single-image defaults: the multi-view terms are unavailable, so mild
// smoothness and shadow priors keep the problem well posed.
OptimizerConfig single_view_config();

struct DecomposeInit {
  std::optional<Image> normals;
  std::optional<Image> albedo;
  std::optional<Image> shadow;
  std::optional<ShLighting> lighting;
  // With depth, normals are initialised from depth gradients; required for
  // multi-view terms.
  std::optional<CameraView> camera;
};

struct NeighborView {
  Image image;
  Mask mask;
  CameraView camera;
  // Decomposed with the single-view settings when absent.
  std::optional<Decomposition> decomposition;
};

struct LossBreakdown {
  double appearance = 0.0;
  double albedo_smoothness = 0.0;
  double shadow_prior = 0.0;
  double albedo_consistency = 0.0;
  double cross_render = 0.0;
  double total = 0.0;  // weighted
};

struct DecomposeResult {
  Decomposition decomposition;
  std::vector<double> loss_trace;  // total loss after each finest-level iteration
  LossBreakdown final_loss;
  int iterations = 0;
  int accepted_steps = 0;
  int neighbors_used = 0;
  bool converged = false;
};

// Minimises the weighted objective with Adam steps that are accepted only
// when they do not increase the loss, so loss_trace is non-increasing.
// Throws NumericalError (message carries the recent trace) when the loss
// becomes NaN or overflows.
DecomposeResult decompose(const Image& img, const Mask& mask,
                          const DecomposeInit& init, const OptimizerConfig& cfg,
                          const std::vector<NeighborView>& neighbors = {});

// Optimisation variables. Albedo is projected to [0,1] after every step,
// normals use stereographic coordinates (2 channels), shadow a logit
// (1 channel) and lighting the coordinates w in L = mean + basis w of the
// configured subspace (identity when none).
struct Parameters {
  Image albedo;
  Image stereo;
  Image logit;
  Eigen::VectorXd lighting;
};

// The weighted objective for one image with precomputed multi-view targets.
class Objective {
 public:
  Objective(const Image& img, const Mask& mask, const OptimizerConfig& cfg,
            std::vector<AlbedoTarget> albedo_targets = {},
            std::vector<CrossRenderTarget> render_targets = {});

  // Total weighted loss; fills `grad` (same layout as x) when non-null.
  double evaluate(const Parameters& x, Parameters* grad = nullptr,
                  LossBreakdown* parts = nullptr) const;

  Parameters parameters_from(const Decomposition& d) const;
  // Layers for the current parameters (residual left empty).
  Decomposition layers(const Parameters& x) const;
  const ShSubspace& subspace() const { return subspace_; }

 private:
  Image img_;
  Mask mask_;
  OptimizerConfig cfg_;
  ShSubspace subspace_;
  std::vector<AlbedoTarget> albedo_targets_;
  std::vector<CrossRenderTarget> render_targets_;
};

// Stereographic chart for unit normals, singular only at n = (0,0,-1).
Eigen::Vector2d normal_to_stereo(const Eigen::Vector3d& n);
Eigen::Vector3d stereo_to_normal(const Eigen::Vector2d& pq);
// d n / d (p, q).
Eigen::Matrix<double, 3, 2> stereo_jacobian(const Eigen::Vector2d& pq);

// Shadow chart: s = min(1, max(eps, kappa * logistic(u))). The optimiser
// keeps u inside [shadow_to_logit(eps), shadow_to_logit(1)], where the
// derivative is kappa * logistic(u) * (1 - logistic(u)).
inline constexpr double kShadowKappa = 1.05;
double shadow_from_logit(double u);
double shadow_logit_derivative(double u);
double shadow_to_logit(double s);

}  // namespace relumo
