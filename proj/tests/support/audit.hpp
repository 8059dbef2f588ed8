#pragma once

#include <algorithm>
#include <array>
#include <random>
#include <span>
#include <string>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "relumo/decompose.hpp"
#include "relumo/losses.hpp"
#include "relumo/rotation.hpp"

namespace fixtures {

// Worst finite-difference disagreement of Objective::evaluate, per block.
struct AuditResult {
  std::array<double, 4> worst{};  // albedo, stereo, logit, lighting
  int checks = 0;
  double max() const { return *std::max_element(worst.begin(), worst.end()); }
};

inline constexpr std::array<const char*, 4> kAuditBlocks = {"albedo", "normals", "shadow",
                                                            "lighting"};

// Every loss term switched on: appearance, TV, shadow prior, one albedo
// consistency and one cross-render target. Lighting is either confined to a
// 6-dimensional subspace or free in all 27 coefficients. Random points keep
// clear of all clamps.
inline AuditResult gradient_audit(int points, std::uint64_t seed, bool subspace,
                                  int entries_per_block = 4) {
  using namespace relumo;
  std::mt19937_64 rng(seed);
  const int n = 16;
  const Eigen::Matrix3d rb = axis_angle_rotation(Eigen::Vector3d(0.1, 1, 0).normalized(), 0.08);
  const TwoView tv = make_two_view(n, n, rb, {0.2, 0.05, 0}, random_lighting(rng), {0.3, 0.25, 0.2});
  const ViewPair views{tv.cam_a, tv.cam_b, {}};
  Decomposition shape = tv.a;
  const AlbedoTarget at = make_albedo_target(shape, tv.b, views);
  const CrossRenderTarget rt = make_cross_render_target(
      shape, tv.image_b, tv.b.shadow, tv.b.mask, tv.b.lighting, relative_rotation(tv.cam_a, tv.cam_b),
      views);

  std::vector<ShLighting> samples;
  for (int i = 0; i < 20; ++i) samples.push_back(random_lighting(rng));
  const ShSubspace sub = build_subspace(samples, 6);

  OptimizerConfig cfg;
  cfg.weights = {1.0, 0.5, 0.5, 0.05, 0.01};
  if (subspace) cfg.subspace = &sub;
  // Larger LAB weight so the multi-view terms are not swamped by appearance.
  cfg.lab_scale = 1e-2;
  Mask mask(n, n, true);
  mask.set(3, 5, false);
  const Image img = random_image(n, n, 3, 0.02, 0.25, rng);
  const Objective obj(img, mask, cfg, {at}, {rt});

  AuditResult out;
  std::uniform_real_distribution<double> pq(-0.5, 0.5), u(-0.6, 2.0), w(-0.3, 0.3);
  for (int k = 0; k < points; ++k) {
    Parameters x;
    x.albedo = random_image(n, n, 3, 0.1, 0.5, rng, ColorSpace::Scalar);
    x.stereo = Image(n, n, 2, ColorSpace::Scalar);
    for (double& v : x.stereo.data()) v = pq(rng);
    x.logit = Image(n, n, 1, ColorSpace::Scalar);
    for (double& v : x.logit.data()) v = u(rng);
    if (subspace) {
      x.lighting = Eigen::VectorXd(sub.basis.cols());
      for (int i = 0; i < x.lighting.size(); ++i) x.lighting[i] = w(rng);
    } else {
      x.lighting = random_lighting(rng).flatten();
    }

    Parameters g;
    obj.evaluate(x, &g);
    auto f = [&] { return obj.evaluate(x); };
    std::span<double> blocks[4] = {x.albedo.data(), x.stereo.data(), x.logit.data(),
                                   {x.lighting.data(), static_cast<std::size_t>(x.lighting.size())}};
    std::span<const double> grads[4] = {
        g.albedo.data(), g.stereo.data(), g.logit.data(),
        {g.lighting.data(), static_cast<std::size_t>(g.lighting.size())}};
    for (int b = 0; b < 4; ++b) {
      // Directional derivative along a random direction covering the block.
      std::normal_distribution<double> z(0.0, 1.0);
      std::vector<double> dir(blocks[b].size());
      double analytic = 0.0;
      for (std::size_t i = 0; i < dir.size(); ++i) {
        dir[i] = z(rng);
        analytic += dir[i] * grads[b][i];
      }
      const std::vector<double> keep(blocks[b].begin(), blocks[b].end());
      const double h = 1e-4;
      const double numeric = stencil_derivative(
          [&](double t) {
            for (std::size_t i = 0; i < dir.size(); ++i) blocks[b][i] = keep[i] + t * dir[i];
            return f();
          },
          h);
      std::copy(keep.begin(), keep.end(), blocks[b].begin());
      out.worst[b] = std::max(out.worst[b], relative_error(analytic, numeric));
      out.worst[b] = std::max(
          out.worst[b], worst_entry_error(blocks[b], grads[b], f, entries_per_block, rng, h));
      out.checks += 1 + entries_per_block;
    }
  }
  return out;
}

}  // namespace fixtures
