#include "relumo/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "relumo/color.hpp"
#include "relumo/error.hpp"
#include "relumo/rotation.hpp"
#include "relumo/image_io.hpp"

namespace relumo {

namespace {

constexpr double kFlush = 0x1p-24;

double render_value(double v) {
  const double f = static_cast<double>(static_cast<float>(v));
  return std::abs(f) < kFlush ? 0.0 : f;
}

double to_single(double v) { return static_cast<double>(static_cast<float>(v)); }

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

}  // namespace

Image lambertian(const Image& albedo, const Image& normals, const Image& shadow,
                 const ShLighting& lighting) {
  require_same_size(albedo, normals, "lambertian");
  require_same_size(albedo, shadow, "lambertian");
  Image out = albedo.like(3, ColorSpace::LinearRGB);
  const auto n = static_cast<std::ptrdiff_t>(albedo.pixel_count());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t q = 0; q < n; ++q) {
    const auto p = static_cast<std::size_t>(q);
    auto nv = normals.pixel(p);
    const ShBasis b = sh_basis_unchecked({nv[0], nv[1], nv[2]});
    const double s = shadow.pixel(p)[0];
    auto a = albedo.pixel(p);
    auto dst = out.pixel(p);
    for (int c = 0; c < 3; ++c) {
      const double sh = std::max(0.0, lighting.coeffs.row(c).dot(b));
      dst[c] = render_value(s * a[c] * sh);
    }
  }
  return out;
}

Image lambertian(const Decomposition& d) {
  return lambertian(d.albedo, d.normals, d.shadow, d.lighting);
}

Image compose(const Image& rendering, const Image& residual) {
  require_same_size(rendering, residual, "compose");
  Image out = rendering.with_space(ColorSpace::LinearRGB);
  auto dst = out.data();
  auto r = residual.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += r[i];
  return out;
}

Image residual_of(const Image& img, const Image& rendering) {
  require_same_size(img, rendering, "residual");
  Image out = img.with_space(ColorSpace::Scalar);
  auto dst = out.data();
  auto r = rendering.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= r[i];
  return out;
}

Image reconstruct(const Decomposition& d) {
  return compose(lambertian(d), d.residual);
}

void validate(const Decomposition& d) {
  if (d.albedo.channels() != 3 || d.normals.channels() != 3 ||
      d.shadow.channels() != 1 || d.residual.channels() != 3)
    throw Error("decomposition layers have the wrong channel counts");
  require_same_size(d.albedo, d.normals, "decomposition");
  require_same_size(d.albedo, d.shadow, "decomposition");
  require_same_size(d.albedo, d.residual, "decomposition");
  require_same_size(d.albedo, d.mask, "decomposition");
  for (double s : d.shadow.data())
    if (!(s >= 0.0 && s <= 1.0)) throw Error("shadow values must lie in [0,1]");
  for (double a : d.albedo.data())
    if (!(a >= 0.0 && a <= 1.0)) throw Error("albedo values must lie in [0,1]");
  if (!d.lighting.coeffs.allFinite()) throw Error("lighting is not finite");
}

nlohmann::json lighting_to_json(const ShLighting& l) {
  const ShVector v = l.flatten();
  return {{"sh", std::vector<double>(v.data(), v.data() + 27)},
          {"convention", kShConvention}};
}

ShLighting lighting_from_json(const nlohmann::json& j) {
  const nlohmann::json* arr = &j;
  if (j.is_object()) {
    if (j.contains("convention") && j.at("convention") != kShConvention)
      throw Error("unsupported SH convention " + j.at("convention").dump());
    if (!j.contains("sh")) throw Error("lighting JSON lacks an \"sh\" array");
    arr = &j.at("sh");
  }
  if (!arr->is_array()) throw Error("\"sh\" must be an array");
  std::vector<double> v;
  for (const auto& e : *arr) {
    if (!e.is_number()) throw Error("\"sh\" entries must be numbers");
    v.push_back(e.get<double>());
  }
  for (double x : v)
    if (!std::isfinite(x)) throw Error("\"sh\" entries must be finite");
  return ShLighting::from_flat(v);
}

ShLighting load_lighting(const std::filesystem::path& path) {
  try {
    return lighting_from_json(read_json(path));
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void save_lighting(const ShLighting& l, const std::filesystem::path& path) {
  write_json(lighting_to_json(l), path);
}

Eigen::Matrix3d rotation_from_json(const nlohmann::json& j) {
  const nlohmann::json& arr = j.is_object() ? j.at("R") : j;
  const auto v = arr.get<std::vector<double>>();
  if (v.size() != 9) throw Error("rotation needs 9 row-major entries");
  Eigen::Matrix3d r;
  for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = v[i];
  require_rotation(r, "rotation json");
  return r;
}

Eigen::Matrix3d load_rotation(const std::filesystem::path& path) {
  try {
    return rotation_from_json(read_json(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Decomposition quantize_for_storage(const Decomposition& d) {
  const Image original = reconstruct(d);
  Decomposition q = d;
  for (double& a : q.albedo.data()) {
    const double code = std::lround(
        std::clamp(linear_to_srgb(std::clamp(a, 0.0, 1.0)), 0.0, 1.0) * 65535.0);
    a = to_single(srgb_to_linear(code / 65535.0));
  }
  for (double& s : q.shadow.data())
    s = to_single(std::lround(std::clamp(s, 0.0, 1.0) * 65535.0) / 65535.0);
  for (double& n : q.normals.data()) n = to_single(n);
  q.residual = residual_of(original, lambertian(q));
  return q;
}

void save_decomposition(const Decomposition& d, const std::filesystem::path& dir,
                        const nlohmann::json& manifest) {
  validate(d);
  std::filesystem::create_directories(dir);
  const Decomposition q = quantize_for_storage(d);
  save_png(q.albedo, dir / "albedo.png", 16);
  save_pfm(q.normals, dir / "normals.pfm");
  save_png(q.shadow, dir / "shadow.png", 16);
  save_pfm(q.residual, dir / "residual.pfm");
  save_lighting(q.lighting, dir / "lighting.json");
  save_mask(q.mask, dir / "mask.png");
  write_json(manifest, dir / "manifest.json");
}

Decomposition load_decomposition(const std::filesystem::path& dir) {
  Decomposition d;
  d.albedo = load_image(dir / "albedo.png", ImageFormat::PNG);
  d.normals = load_image(dir / "normals.pfm", ImageFormat::PFM)
                  .with_space(ColorSpace::Scalar);
  d.shadow = load_png_raw(dir / "shadow.png");
  d.residual = load_image(dir / "residual.pfm", ImageFormat::PFM)
                   .with_space(ColorSpace::Scalar);
  d.lighting = load_lighting(dir / "lighting.json");
  d.mask = load_mask(dir / "mask.png");
  if (d.shadow.channels() != 1) throw IoError("shadow.png must be grayscale");
  validate(d);
  return d;
}

}  // namespace relumo
