#include <doctest.h>

#include <cmath>
#include <random>

#include "audit.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "relumo/decompose.hpp"
#include "relumo/error.hpp"
#include "relumo/losses.hpp"
#include "relumo/rotation.hpp"

using namespace relumo;

namespace {

bool foreground_identical(const Image& a, const Image& b, const Mask& m) {
  for (std::size_t p = 0; p < a.pixel_count(); ++p) {
    if (!m[p]) continue;
    for (int c = 0; c < a.channels(); ++c)
      if (a.pixel(p)[c] != b.pixel(p)[c]) return false;
  }
  return true;
}

void check_layer_invariants(const Decomposition& d) {
  for (std::size_t p = 0; p < d.mask.pixel_count(); ++p) {
    const double s = d.shadow.pixel(p)[0];
    CHECK((s >= 0.0 && s <= 1.0));
    for (int c = 0; c < 3; ++c) {
      const double a = d.albedo.pixel(p)[c];
      CHECK((a >= 0.0 && a <= 1.0));
    }
    if (!d.mask[p]) continue;
    auto n = d.normals.pixel(p);
    CHECK(std::abs(std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]) - 1.0) < 1e-4);
  }
}

}  // namespace

TEST_CASE("stereographic chart") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    Eigen::Vector3d n = fixtures::random_unit(rng);
    if (n.z() < -0.9) continue;
    CHECK((stereo_to_normal(normal_to_stereo(n)) - n).norm() < 1e-12);
  }
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 50; ++i) {
    Eigen::Vector2d pq(u(rng), u(rng));
    CHECK(std::abs(stereo_to_normal(pq).norm() - 1.0) < 1e-12);
    const Eigen::Matrix<double, 3, 2> j = stereo_jacobian(pq);
    for (int k = 0; k < 2; ++k) {
      Eigen::Vector2d e = Eigen::Vector2d::Zero();
      e[k] = 1e-6;
      const Eigen::Vector3d fd = (stereo_to_normal(pq + e) - stereo_to_normal(pq - e)) / 2e-6;
      CHECK((fd - j.col(k)).norm() < 1e-7);
    }
  }
}

TEST_CASE("shadow logit chart") {
  for (double s : {kShadowEpsilon, 0.01, 0.3, 0.5, 0.9, 0.999})
    CHECK(shadow_from_logit(shadow_to_logit(s)) == doctest::Approx(s).epsilon(1e-12));
  CHECK(shadow_from_logit(shadow_to_logit(1.0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(shadow_from_logit(-50) == kShadowEpsilon);
  CHECK(shadow_from_logit(50) == 1.0);
  for (double u : {-3.0, -0.5, 0.0, 1.2, 2.5}) {
    const double fd = (shadow_from_logit(u + 1e-6) - shadow_from_logit(u - 1e-6)) / 2e-6;
    CHECK(fixtures::relative_error(shadow_logit_derivative(u), fd) < 1e-7);
  }
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(validate(OptimizerConfig{}));
  CHECK_NOTHROW(validate(single_view_config()));
  OptimizerConfig c;
  c.weights.cross_render = -0.1;
  CHECK_THROWS_AS(validate(c), Error);
  c = {};
  c.weights.shadow_prior = std::nan("");
  CHECK_THROWS_AS(validate(c), Error);
  c = {};
  c.learning_rate = 0;
  CHECK_THROWS_AS(validate(c), Error);
  c = {};
  c.decay_every = 0;
  CHECK_THROWS_AS(validate(c), Error);
  c = {};
  c.iterations = -1;
  CHECK_THROWS_AS(validate(c), Error);
  c = {};
  c.pyramid_levels = 0;
  CHECK_THROWS_AS(validate(c), Error);
}

TEST_CASE("objective gradients with every term on") {
  for (bool subspace : {true, false}) {
    const fixtures::AuditResult r = fixtures::gradient_audit(8, 42, subspace);
    for (int b = 0; b < 4; ++b) {
      INFO(std::string(fixtures::kAuditBlocks[b]) << (subspace ? " (subspace)" : " (free lighting)"));
      CHECK(r.worst[b] < 1e-4);
    }
  }
}

TEST_CASE("estimated lighting is reported at unit mean shading luminance") {
  const auto s = fixtures::make_scene(24, 20, 13, true);
  OptimizerConfig cfg = single_view_config();
  cfg.iterations = 150;
  auto mean_luminance = [](const Decomposition& d) {
    double sum = 0.0;
    for (std::size_t p = 0; p < d.normals.pixel_count(); ++p) {
      if (!d.mask[p]) continue;
      const Eigen::Vector3d n(d.normals.pixel(p)[0], d.normals.pixel(p)[1], d.normals.pixel(p)[2]);
      const Eigen::Vector3d sh = d.lighting.coeffs * sh_basis(n);
      sum += 0.2126 * sh[0] + 0.7152 * sh[1] + 0.0722 * sh[2];
    }
    return sum / static_cast<double>(d.mask.count());
  };
  const DecomposeResult r = decompose(s.image, s.mask, {}, cfg);
  CHECK(mean_luminance(r.decomposition) == doctest::Approx(1.0).epsilon(1e-9));

  // Supplied lighting keeps its own scale.
  DecomposeInit init;
  init.lighting = 1.7 * s.lighting;
  cfg.optimize_lighting = false;
  const DecomposeResult k = decompose(s.image, s.mask, init, cfg);
  CHECK((k.decomposition.lighting.coeffs - init.lighting->coeffs).norm() < 1e-12);
}

TEST_CASE("objective breakdown and parameter chart") {
  const auto s = fixtures::make_scene(8, 8, 3);
  OptimizerConfig cfg = single_view_config();
  const Objective obj(s.image, s.mask, cfg);
  const Parameters x = obj.parameters_from(s.decomposition());
  LossBreakdown parts;
  const double f = obj.evaluate(x, nullptr, &parts);
  CHECK(f == doctest::Approx(parts.appearance + 0.05 * parts.albedo_smoothness +
                             0.01 * parts.shadow_prior)
                 .epsilon(1e-14));
  const Decomposition back = obj.layers(x);
  for (std::size_t i = 0; i < back.normals.data().size(); ++i)
    CHECK(back.normals.data()[i] == doctest::Approx(s.normals.data()[i]).epsilon(1e-12));
  CHECK((back.lighting.coeffs - s.lighting.coeffs).norm() < 1e-12);
}

TEST_CASE("ground truth is a fixed point") {
  const auto s = fixtures::make_scene(12, 10, 4, true);
  DecomposeInit init;
  init.albedo = s.albedo;
  init.normals = s.normals;
  init.shadow = s.shadow;
  init.lighting = s.lighting;
  OptimizerConfig cfg;
  cfg.iterations = 100;
  const DecomposeResult r = decompose(s.image, s.mask, init, cfg);
  CHECK(r.final_loss.total < 1e-10);
  const Decomposition& d = r.decomposition;
  for (std::size_t i = 0; i < d.albedo.data().size(); ++i)
    CHECK(std::abs(d.albedo.data()[i] - s.albedo.data()[i]) < 1e-6);
  CHECK((d.lighting.coeffs - s.lighting.coeffs).norm() < 1e-6);
  CHECK(foreground_identical(reconstruct(d), s.image, s.mask));
}

TEST_CASE("normals fixed: albedo times shading recovered") {
  const auto s = fixtures::make_scene(12, 12, 5, true);
  DecomposeInit init;
  init.normals = s.normals;
  OptimizerConfig cfg;
  cfg.optimize_normals = false;
  cfg.optimize_shadow = false;
  cfg.iterations = 1500;
  const DecomposeResult r = decompose(s.image, s.mask, init, cfg);
  const Decomposition& d = r.decomposition;
  const Image sh = shade(d.normals, d.lighting);
  double worst = 0;
  for (std::size_t p = 0; p < sh.pixel_count(); ++p)
    for (int c = 0; c < 3; ++c)
      worst = std::max(worst, std::abs(d.albedo.pixel(p)[c] * sh.pixel(p)[c] - s.image.pixel(p)[c]));
  CHECK(worst < 1e-4);
}

TEST_CASE("generic run: trace, invariants, reconstruction") {
  std::mt19937_64 rng(6);
  auto s = fixtures::make_scene(14, 12, 6, true);
  s.mask.set(0, 0, false);
  s.mask.set(7, 3, false);
  OptimizerConfig cfg = single_view_config();
  cfg.iterations = 150;
  const DecomposeResult r = decompose(s.image, s.mask, {}, cfg);
  REQUIRE(r.loss_trace.size() == static_cast<std::size_t>(r.iterations));
  for (std::size_t i = 1; i < r.loss_trace.size(); ++i) CHECK(r.loss_trace[i] <= r.loss_trace[i - 1]);
  CHECK(r.accepted_steps > 0);
  check_layer_invariants(r.decomposition);
  CHECK(foreground_identical(reconstruct(r.decomposition), s.image, s.mask));
  CHECK(r.decomposition.albedo.at(0, 0, 0) == 0.0);

  const DecomposeResult again = decompose(s.image, s.mask, {}, cfg);
  CHECK(again.loss_trace == r.loss_trace);
  CHECK(again.decomposition.albedo == r.decomposition.albedo);
}

TEST_CASE("divergence raises a numerical error with the trace") {
  const auto s = fixtures::make_scene(8, 8, 7);
  // A mismatched start so that every block has a gradient to follow.
  DecomposeInit init;
  init.albedo = s.albedo;
  init.lighting = 1.3 * s.lighting;
  OptimizerConfig cfg;
  cfg.learning_rate = 1e300;
  cfg.iterations = 10;
  try {
    decompose(s.image, s.mask, init, cfg);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("loss trace") != std::string::npos);
  }
}

TEST_CASE("decompose input errors") {
  const auto s = fixtures::make_scene(6, 6, 8);
  CHECK_THROWS_AS(decompose(s.image, Mask(6, 6), {}, OptimizerConfig{}), Error);
  CHECK_THROWS_AS(decompose(s.shadow, s.mask, {}, OptimizerConfig{}), Error);
  CHECK_THROWS_AS(decompose(s.image, Mask(5, 6, true), {}, OptimizerConfig{}), Error);
  NeighborView nb{s.image, s.mask, fixtures::plane_camera(6, 6, 2.0), std::nullopt};
  CHECK_THROWS_AS(decompose(s.image, s.mask, {}, OptimizerConfig{}, {nb}), Error);
}

TEST_CASE("planted shadow band is explained by the shadow channel") {
  const auto band = fixtures::make_band_scene(32, 24, 12, 20);
  // Geometry is given (as from depth) and held; free normals could tilt
  // away from the light and absorb the band without any prior objecting.
  DecomposeInit init;
  init.normals = band.scene.normals;
  OptimizerConfig cfg = single_view_config();
  cfg.optimize_normals = false;
  const DecomposeResult r = decompose(band.scene.image, band.scene.mask, init, cfg);
  const Decomposition& d = r.decomposition;
  double in_max = 0, out_min = 1;
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 32; ++x) {
      const double sv = d.shadow.at(x, y);
      if (x >= band.x0 && x < band.x1)
        in_max = std::max(in_max, sv);
      else
        out_min = std::min(out_min, sv);
    }
  CHECK(in_max < 0.5);
  CHECK(out_min > 0.9);
  for (int y = 0; y < 24; ++y)
    for (int c = 0; c < 3; ++c)
      for (int edge : {band.x0, band.x1}) {
        const double in = d.albedo.at(edge == band.x0 ? edge : edge - 1, y, c);
        const double out = d.albedo.at(edge == band.x0 ? edge - 1 : edge, y, c);
        CHECK(std::abs(in - out) / out < 0.05);
      }
}

TEST_CASE("multi-view: neighbour order does not matter") {
  std::mt19937_64 rng(9);
  const ShLighting l = fixtures::random_lighting(rng);
  const Eigen::Vector3d colour(0.35, 0.3, 0.25);
  const auto t1 = fixtures::make_two_view(16, 16, axis_angle_rotation({0, 1, 0}, 0.1), {0.3, 0, 0}, l, colour);
  const auto t2 = fixtures::make_two_view(16, 16, axis_angle_rotation({1, 0, 0}, -0.1), {0, 0.3, 0}, l, colour);
  CameraView far = t1.cam_a;
  far.translation = {60, 0, 0};
  const NeighborView n1{t1.image_b, t1.b.mask, t1.cam_b, t1.b};
  const NeighborView n2{t2.image_b, t2.b.mask, t2.cam_b, t2.b};
  const NeighborView n3{t1.image_a, t1.a.mask, far, t1.a};

  DecomposeInit init;
  init.camera = t1.cam_a;
  OptimizerConfig cfg;
  cfg.iterations = 40;
  const DecomposeResult r12 = decompose(t1.image_a, t1.a.mask, init, cfg, {n1, n2, n3});
  const DecomposeResult r21 = decompose(t1.image_a, t1.a.mask, init, cfg, {n3, n2, n1});
  CHECK(r12.neighbors_used == 2);
  CHECK(r12.loss_trace == r21.loss_trace);
  CHECK(r12.decomposition.albedo == r21.decomposition.albedo);
  CHECK(r12.final_loss.cross_render >= 0.0);
  CHECK(foreground_identical(reconstruct(r12.decomposition), t1.image_a, t1.a.mask));

  // Neighbours without a decomposition are decomposed on the fly.
  NeighborView raw = n1;
  raw.decomposition.reset();
  cfg.iterations = 5;
  CHECK(decompose(t1.image_a, t1.a.mask, init, cfg, {raw}).neighbors_used == 1);
}
