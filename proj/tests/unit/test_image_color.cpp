#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "relumo/color.hpp"
#include "relumo/error.hpp"
#include "relumo/image.hpp"
#include "relumo/resample.hpp"

using namespace relumo;

namespace {

// Straight-line CIE formulas with the textbook D65 white.
Eigen::Vector3d lab_oracle(double r, double g, double b) {
  const double X = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double Y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double Z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  auto f = [](double t) {
    const double d = 6.0 / 29.0;
    if (t > d * d * d) return std::cbrt(t);
    return t / (3 * d * d) + 4.0 / 29.0;
  };
  const double fx = f(X / 0.95047), fy = f(Y / 1.0), fz = f(Z / 1.08883);
  return {116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)};
}

}  // namespace

TEST_CASE("image shape and accessors") {
  Image img(4, 3, 3, ColorSpace::LinearRGB, 0.5);
  CHECK(img.data().size() == 4u * 3u * 3u);
  img.at(2, 1, 1) = 0.75;
  CHECK(img.pixel(2, 1)[1] == 0.75);
  CHECK(img.pixel(std::size_t{1 * 4 + 2})[1] == 0.75);
  CHECK_THROWS_AS(Image(2, 2, 3, ColorSpace::LinearRGB, std::vector<double>(5)), Error);
}

TEST_CASE("validate enforces colour-space invariants") {
  Image img(2, 2, 3, ColorSpace::LinearRGB, 0.1);
  CHECK_NOTHROW(validate(img));
  img.at(0, 0, 0) = -0.1;
  CHECK_THROWS_AS(validate(img), Error);
  img.at(0, 0, 0) = std::nan("");
  CHECK_THROWS_AS(validate(img), Error);

  Image signed_img(2, 2, 1, ColorSpace::Scalar, -3.0);
  CHECK_NOTHROW(validate(signed_img));
  CHECK_THROWS_AS(validate(signed_img, true), Error);
}

TEST_CASE("mask algebra") {
  Mask a(3, 1), b(3, 1);
  a.set(0, 0, true);
  a.set(1, 0, true);
  b.set(1, 0, true);
  b.set(2, 0, true);
  CHECK((a & b).count() == 1);
  CHECK((a | b).count() == 3);
  CHECK((a & b).subset_of(a));
  CHECK_FALSE(a.subset_of(b));
  const Mask round = image_to_mask(mask_to_image(a));
  CHECK(round == a);
}

TEST_CASE("sRGB transfer") {
  CHECK(srgb_to_linear(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(srgb_to_linear(0.0) == 0.0);
  const double oracle = std::pow((128.0 / 255.0 + 0.055) / 1.055, 2.4);
  CHECK(srgb_to_linear(128.0 / 255.0) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(oracle == doctest::Approx(0.21586).epsilon(1e-4));
  for (double v = 0.0; v <= 1.0; v += 0.01)
    CHECK(linear_to_srgb(srgb_to_linear(v)) == doctest::Approx(v).epsilon(1e-10));
}

TEST_CASE("LAB conversion") {
  const Eigen::Vector3d white = linear_rgb_to_lab({1, 1, 1});
  CHECK(white.x() == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(std::abs(white.y()) < 1e-9);
  CHECK(std::abs(white.z()) < 1e-9);
  CHECK(linear_rgb_to_lab({0, 0, 0}).norm() < 1e-12);

  const Eigen::Vector3d got = linear_rgb_to_lab({0.5, 0.25, 0.1});
  const Eigen::Vector3d want = lab_oracle(0.5, 0.25, 0.1);
  for (int c = 0; c < 3; ++c) CHECK(got[c] == doctest::Approx(want[c]).epsilon(1e-5));

  SUBCASE("out-of-gamut values are clipped") {
    CHECK((linear_rgb_to_lab({1.5, 2.0, 1.1}) - white).norm() < 1e-12);
    CHECK(linear_rgb_to_lab({-0.2, -1, 0}).norm() < 1e-12);
  }

  SUBCASE("inverse on a 10x10x10 grid") {
    double worst = 0.0;
    for (int r = 0; r < 10; ++r)
      for (int g = 0; g < 10; ++g)
        for (int b = 0; b < 10; ++b) {
          const Eigen::Vector3d rgb(r / 9.0, g / 9.0, b / 9.0);
          worst = std::max(worst, (lab_to_linear_rgb(linear_rgb_to_lab(rgb)) - rgb)
                                      .cwiseAbs()
                                      .maxCoeff());
        }
    CHECK(worst < 1e-4);
  }

  SUBCASE("image-level conversion rejects other spaces") {
    CHECK_THROWS_AS(rgb_to_lab(Image(2, 2, 3, ColorSpace::SRGB)), Error);
    CHECK_THROWS_AS(rgb_to_lab(Image(2, 2, 1, ColorSpace::LinearRGB)), Error);
  }
}

TEST_CASE("LAB jacobian matches finite differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Vector3d rgb(u(rng), u(rng), u(rng));
    const Eigen::Matrix3d j = lab_jacobian(rgb);
    for (int c = 0; c < 3; ++c) {
      const double h = 1e-6;
      Eigen::Vector3d up = rgb, dn = rgb;
      up[c] += h;
      dn[c] -= h;
      const Eigen::Vector3d fd = (linear_rgb_to_lab(up) - linear_rgb_to_lab(dn)) / (2 * h);
      for (int r = 0; r < 3; ++r)
        CHECK(j(r, c) == doctest::Approx(fd[r]).epsilon(1e-5).scale(1.0));
    }
  }
  CHECK(lab_jacobian({1.5, 0.5, 0.5}).col(0).norm() == 0.0);
}

TEST_CASE("downscale") {
  CHECK_THROWS_AS(downscale(Image(4, 4, 1, ColorSpace::Scalar), 0), Error);

  const Image c = fixtures::constant(8, 8, 3, 0.3);
  const Image dc = downscale(c, 4);
  CHECK(dc.width() == 2);
  for (double v : dc.data()) CHECK(v == doctest::Approx(0.3).epsilon(1e-15));

  Image two(2, 2, 1, ColorSpace::Scalar, std::vector<double>{0, 0, 1, 1});
  CHECK(downscale(two, 2).at(0, 0) == 0.5);

  std::mt19937_64 rng(3);
  const Image r = fixtures::random_image(8, 8, 3, 0, 1, rng);
  CHECK(downscale(r, 1) == r);
  const Image d = downscale(r, 4);
  for (int by = 0; by < 2; ++by)
    for (int bx = 0; bx < 2; ++bx)
      for (int ch = 0; ch < 3; ++ch) {
        double s = 0;
        for (int y = 0; y < 4; ++y)
          for (int x = 0; x < 4; ++x) s += r.at(bx * 4 + x, by * 4 + y, ch);
        CHECK(d.at(bx, by, ch) == doctest::Approx(s / 16).epsilon(1e-14));
      }

  SUBCASE("non-multiple sizes crop trailing pixels") {
    const Image odd = fixtures::random_image(9, 6, 1, 0, 1, rng, ColorSpace::Scalar);
    const Image o = downscale(odd, 4);
    CHECK(o.width() == 2);
    CHECK(o.height() == 1);
  }

  SUBCASE("masked variant averages valid pixels only") {
    Image img(2, 2, 1, ColorSpace::Scalar, std::vector<double>{1, 5, 3, 9});
    Mask m(2, 2);
    m.set(0, 0, true);
    m.set(0, 1, true);
    const MaskedImage out = downscale(img, m, 2);
    CHECK(out.mask[0]);
    CHECK(out.image.at(0, 0) == 2.0);
    const MaskedImage none = downscale(img, Mask(2, 2), 2);
    CHECK_FALSE(none.mask[0]);
    CHECK(none.image.at(0, 0) == 0.0);
  }
}

TEST_CASE("bilinear sampling") {
  Image img(2, 2, 1, ColorSpace::Scalar, std::vector<double>{0, 1, 2, 3});
  double v = -1;
  CHECK(sample_bilinear(img, 0.5, 0.5, {&v, 1}));
  CHECK(v == doctest::Approx(1.5));
  CHECK(sample_bilinear(img, 1.0, 1.0, {&v, 1}));
  CHECK(v == 3.0);
  v = -1;
  CHECK_FALSE(sample_bilinear(img, 1.5, 0.0, {&v, 1}));
  CHECK(v == -1);
}
