#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "fixtures.hpp"
#include "relumo/color.hpp"
#include "relumo/decomposition.hpp"
#include "relumo/error.hpp"
#include "relumo/image_io.hpp"

using namespace relumo;

namespace {

Image srgb_pixel(double code) {
  return Image(1, 1, 3, ColorSpace::SRGB, code / 255.0);
}

}  // namespace

TEST_CASE("8-bit PNG decode applies the sRGB curve") {
  CHECK(decode_image(encode_png(srgb_pixel(255), 8)).at(0, 0, 0) == 1.0);
  CHECK(decode_image(encode_png(srgb_pixel(0), 8)).at(0, 0, 1) == 0.0);
  const Image mid = decode_image(encode_png(srgb_pixel(128), 8));
  CHECK(mid.space() == ColorSpace::LinearRGB);
  const double oracle = std::pow((128.0 / 255.0 + 0.055) / 1.055, 2.4);
  CHECK(mid.at(0, 0, 2) == fixtures::f32(oracle));
}

TEST_CASE("16-bit PNG round trip within one code") {
  std::mt19937_64 rng(5);
  const Image img = fixtures::random_image(13, 7, 3, 0, 1, rng, ColorSpace::Scalar);
  const Image back = decode_png_raw(encode_png(img, 16));
  REQUIRE(back.same_size(img));
  REQUIRE(back.channels() == 3);
  for (std::size_t i = 0; i < img.data().size(); ++i)
    CHECK(std::abs(back.data()[i] - img.data()[i]) <= 0.5 / 65535.0 + 1e-9);

  SUBCASE("save and load through the linear path") {
    const auto dir = fixtures::temp_dir("png");
    Image lin = fixtures::random_image(5, 4, 3, 0, 1, rng);
    save_png(lin, dir / "a.png");
    const Image again = load_image(dir / "a.png");
    save_png(again, dir / "b.png");
    CHECK(read_file(dir / "a.png") == read_file(dir / "b.png"));
  }
}

TEST_CASE("gray PNGs expand to three channels") {
  const Image gray(3, 2, 1, ColorSpace::Scalar, 0.5);
  const Image rgb = decode_image(encode_png(gray, 8));
  CHECK(rgb.channels() == 3);
  CHECK(rgb.at(2, 1, 0) == rgb.at(2, 1, 2));
  CHECK(decode_png_raw(encode_png(gray, 16)).channels() == 1);
}

TEST_CASE("PFM is bit exact and stored bottom-up") {
  std::mt19937_64 rng(7);
  Image img = fixtures::random_image(6, 3, 3, -2, 2, rng, ColorSpace::Scalar);
  const Bytes bytes = encode_pfm(img);
  CHECK(decode_pfm(bytes).data().size() == img.data().size());
  const Image back = decode_pfm(bytes);
  for (std::size_t i = 0; i < img.data().size(); ++i)
    CHECK(back.data()[i] == img.data()[i]);

  const std::string text(bytes.begin(), bytes.begin() + 16);
  CHECK(text.rfind("PF\n6 3\n-1", 0) == 0);
  // First stored float is the bottom-left pixel.
  const std::size_t header = bytes.size() - img.data().size() * 4;
  float first;
  std::memcpy(&first, bytes.data() + header, 4);
  CHECK(first == static_cast<float>(img.at(0, 2, 0)));

  const Image mono = fixtures::random_image(4, 4, 1, 0, 1, rng, ColorSpace::Scalar);
  const Image mono_back = decode_pfm(encode_pfm(mono));
  CHECK(mono_back.channels() == 1);
  CHECK(std::equal(mono.data().begin(), mono.data().end(), mono_back.data().begin()));
}

TEST_CASE("Radiance HDR round trip") {
  std::mt19937_64 rng(9);
  const Image img = fixtures::random_image(9, 4, 3, 0.01, 50, rng);
  const Image back = decode_hdr(encode_hdr(img));
  REQUIRE(back.same_size(img));
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    const double m = std::max({img.pixel(p)[0], img.pixel(p)[1], img.pixel(p)[2]});
    for (int c = 0; c < 3; ++c)
      CHECK(std::abs(back.pixel(p)[c] - img.pixel(p)[c]) <= m / 128.0 + 1e-6);
  }
}

TEST_CASE("Radiance HDR reads RLE scanlines") {
  std::string header = "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 1 +X 8\n";
  Bytes bytes(header.begin(), header.end());
  for (std::uint8_t b : {2, 2, 0, 8}) bytes.push_back(b);
  // Each component: a run of 8 identical bytes.
  for (std::uint8_t v : {128, 64, 32, 129}) {
    bytes.push_back(128 + 8);
    bytes.push_back(v);
  }
  const Image img = decode_hdr(bytes);
  REQUIRE(img.width() == 8);
  REQUIRE(img.height() == 1);
  // RGBE (128, 64, 32, 129): value = m * 2^(e - 136).
  for (int x = 0; x < 8; ++x) {
    CHECK(img.at(x, 0, 0) == 1.0);
    CHECK(img.at(x, 0, 1) == 0.5);
  }
}

TEST_CASE("format sniffing and errors") {
  const Bytes png = encode_png(srgb_pixel(10), 8);
  CHECK(sniff_format(png) == ImageFormat::PNG);
  CHECK(sniff_format(encode_pfm(Image(1, 1, 1, ColorSpace::Scalar))) == ImageFormat::PFM);
  CHECK(sniff_format(encode_hdr(Image(1, 1, 3, ColorSpace::LinearRGB))) == ImageFormat::HDR);
  const Bytes junk = {1, 2, 3, 4, 5, 6, 7, 8};
  CHECK_THROWS_AS(sniff_format(junk), Error);
  CHECK_THROWS_AS(load_image("/nonexistent/file.png"), IoError);
  Bytes truncated(png.begin(), png.begin() + png.size() / 2);
  CHECK_THROWS_AS(decode_image(truncated), Error);
  CHECK_THROWS_AS(decode_pfm(Bytes{'P', 'F', '\n', '9', '9', '9', '9', '9', '9', '9', '9', '9', ' ', '9', '9', '9', '9', '9', '9', '\n', '-', '1', '\n'}), Error);
}

TEST_CASE("masks threshold at 128") {
  Image codes(3, 1, 1, ColorSpace::Scalar, std::vector<double>{127 / 255.0, 128 / 255.0, 1.0});
  const Mask m = decode_mask(encode_png(codes, 8));
  CHECK_FALSE(m[0]);
  CHECK(m[1]);
  CHECK(m[2]);
  CHECK(decode_mask(encode_mask(m)) == m);
}

TEST_CASE("decomposition directory round trip") {
  const auto scene = fixtures::make_scene(12, 9, 21);
  Decomposition d = scene.decomposition();
  d.mask.set(3, 3, false);
  const auto dir = fixtures::temp_dir("decomp");
  save_decomposition(d, dir, {{"note", "x"}});
  int files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  CHECK(files == 7);

  const Decomposition back = load_decomposition(dir);
  const Decomposition q = quantize_for_storage(d);
  CHECK(back.albedo == q.albedo);
  CHECK(back.shadow == q.shadow);
  CHECK(back.normals == q.normals);
  CHECK(back.mask == d.mask);
  CHECK(back.lighting.coeffs.isApprox(d.lighting.coeffs, 1e-6));
  // The stored residual closes the loop on the quantised layers.
  const Image orig = reconstruct(d);
  const Image again = reconstruct(back);
  for (std::size_t i = 0; i < orig.data().size(); ++i) CHECK(again.data()[i] == orig.data()[i]);
}

TEST_CASE("lighting json") {
  std::mt19937_64 rng(1);
  const ShLighting l = fixtures::random_lighting(rng);
  const auto j = lighting_to_json(l);
  CHECK(j.at("sh").size() == 27);
  CHECK(j.at("convention") == "poly-v1");
  CHECK(lighting_from_json(j).coeffs.isApprox(l.coeffs, 1e-7));
  CHECK(j.at("sh")[9].get<double>() == doctest::Approx(l.coeffs(1, 0)).epsilon(1e-7));
  nlohmann::json bad = {{"sh", std::vector<double>(26, 0.0)}};
  CHECK_THROWS_AS(lighting_from_json(bad), Error);
  CHECK_THROWS_AS(lighting_from_json({{"sh", std::vector<double>(27, 0.0)}, {"convention", "other"}}),
                  Error);

  const Eigen::Matrix3d r = rotation_from_json(nlohmann::json::array({0, -1, 0, 1, 0, 0, 0, 0, 1}));
  CHECK(r(0, 1) == -1.0);
  CHECK_THROWS_AS(rotation_from_json(nlohmann::json::array({1, 0, 0, 0, 1, 0, 0, 0, 2})), Error);
}
