#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <random>
#include <string>
#include <unistd.h>

#include "relumo/camera.hpp"
#include "relumo/decomposition.hpp"
#include "relumo/image.hpp"
#include "relumo/sh.hpp"
#include "relumo/decompose.hpp"

namespace fixtures {

using relumo::ColorSpace;
using relumo::Image;
using relumo::Mask;
using relumo::ShLighting;

inline double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

inline Image round_to_float(Image img) {
  for (double& v : img.data()) v = f32(v);
  return img;
}

inline Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v;
  do {
    v = {n(rng), n(rng), n(rng)};
  } while (v.norm() < 1e-6);
  return v.normalized();
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  Eigen::Quaterniond q(Eigen::Vector4d(random_unit(rng).x(), random_unit(rng).y(),
                                       random_unit(rng).z(), random_unit(rng).x()));
  std::normal_distribution<double> n(0.0, 1.0);
  q = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

inline Image random_image(int w, int h, int ch, double lo, double hi,
                          std::mt19937_64& rng,
                          ColorSpace space = ColorSpace::LinearRGB) {
  std::uniform_real_distribution<double> u(lo, hi);
  Image img(w, h, ch, space);
  for (double& v : img.data()) v = f32(u(rng));
  return img;
}

// Unit normals with z >= min_z (facing the camera).
inline Image random_normals(int w, int h, std::mt19937_64& rng, double min_z = 0.3) {
  Image n(w, h, 3, ColorSpace::Scalar);
  for (std::size_t p = 0; p < n.pixel_count(); ++p) {
    Eigen::Vector3d v;
    do {
      v = random_unit(rng);
    } while (v.z() < min_z);
    for (int c = 0; c < 3; ++c) n.pixel(p)[c] = v[c];
  }
  return n;
}

// Smooth normals of a bumpy height field, all facing the camera.
inline Image smooth_normals(int w, int h) {
  Image n(w, h, 3, ColorSpace::Scalar);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = 0.5 * std::sin(0.3 * x + 0.1 * y);
      const double gy = 0.4 * std::cos(0.25 * y - 0.2 * x);
      const Eigen::Vector3d v = Eigen::Vector3d(-gx, -gy, 1.0).normalized();
      for (int c = 0; c < 3; ++c) n.at(x, y, c) = v[c];
    }
  return n;
}

// Shading stays within [0.29, 1.82] for every unit normal, so with albedo
// <= 0.5 the rendered image never reaches the min(1, i/s) clip.
inline ShLighting random_lighting(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dc(0.9, 1.2), lin(-0.25, 0.25), quad(-0.04, 0.04);
  ShLighting l;
  for (int c = 0; c < 3; ++c) {
    l.coeffs(c, 0) = dc(rng);
    for (int j = 1; j < 4; ++j) l.coeffs(c, j) = lin(rng);
    for (int j = 4; j < 9; ++j) l.coeffs(c, j) = quad(rng);
  }
  return l;
}

inline Image constant(int w, int h, int ch, double v, ColorSpace s = ColorSpace::LinearRGB) {
  return Image(w, h, ch, s, v);
}

// Forward model without residual: a synthetic, exactly Lambertian scene.
struct Scene {
  Image albedo, normals, shadow, image;
  ShLighting lighting;
  Mask mask;

  relumo::Decomposition decomposition() const {
    relumo::Decomposition d{albedo, normals, shadow, lighting, Image(), mask};
    d.residual = relumo::residual_of(image, relumo::lambertian(d));
    return d;
  }
};

inline Scene make_scene(int w, int h, std::uint64_t seed, bool smooth = false) {
  std::mt19937_64 rng(seed);
  Scene s;
  s.albedo = random_image(w, h, 3, 0.15, 0.5, rng);
  s.normals = smooth ? smooth_normals(w, h) : random_normals(w, h, rng);
  s.shadow = Image(w, h, 1, ColorSpace::Scalar, 1.0);
  s.lighting = random_lighting(rng);
  s.mask = Mask(w, h, true);
  s.image = relumo::lambertian(s.albedo, s.normals, s.shadow, s.lighting);
  return s;
}

// Smooth scene whose columns [x0, x1) are darkened by `factor`, as a cast
// shadow would. True albedo is constant so any band structure left in the
// recovered albedo is leakage.
struct BandScene {
  Scene scene;  // unshadowed layers; scene.image carries the band
  int x0 = 0, x1 = 0;
};

inline BandScene make_band_scene(int w, int h, int x0, int x1, double factor = 0.3) {
  BandScene b;
  Scene& s = b.scene;
  s.albedo = Image(w, h, 3, ColorSpace::LinearRGB);
  for (std::size_t p = 0; p < s.albedo.pixel_count(); ++p) {
    s.albedo.pixel(p)[0] = 0.45;
    s.albedo.pixel(p)[1] = 0.35;
    s.albedo.pixel(p)[2] = 0.25;
  }
  s.normals = smooth_normals(w, h);
  s.shadow = Image(w, h, 1, ColorSpace::Scalar, 1.0);
  std::mt19937_64 rng(7);
  s.lighting = random_lighting(rng);
  s.mask = Mask(w, h, true);
  s.image = relumo::lambertian(s.albedo, s.normals, s.shadow, s.lighting);
  for (int y = 0; y < h; ++y)
    for (int x = x0; x < x1; ++x)
      for (int c = 0; c < 3; ++c) s.image.at(x, y, c) = f32(factor * s.image.at(x, y, c));
  b.x0 = x0;
  b.x1 = x1;
  return b;
}

// Three coloured lobes from different directions: every pixel's RGB
// constrains its normal.
inline ShLighting rgb_lobe_lighting() {
  ShLighting l;
  const Eigen::Vector3d dirs[3] = {Eigen::Vector3d(0.6, 0.2, 0.77).normalized(),
                                   Eigen::Vector3d(-0.5, 0.5, 0.7).normalized(),
                                   Eigen::Vector3d(0.1, -0.7, 0.7).normalized()};
  for (int c = 0; c < 3; ++c) {
    Eigen::Vector3d colour = Eigen::Vector3d::Zero();
    colour[c] = 1.0;
    l.coeffs += relumo::directional_lighting(dirs[c], colour, 0.3 * colour).coeffs;
  }
  return l;
}

// Each normal tilted by `degrees` about a random axis orthogonal to it.
inline Image perturb_normals(const Image& normals, double degrees, std::mt19937_64& rng) {
  Image out = normals;
  const double a = degrees * 3.14159265358979323846 / 180.0;
  for (std::size_t p = 0; p < out.pixel_count(); ++p) {
    const Eigen::Vector3d n(normals.pixel(p)[0], normals.pixel(p)[1], normals.pixel(p)[2]);
    const Eigen::Vector3d axis = n.cross(random_unit(rng)).normalized();
    const Eigen::Vector3d m = Eigen::AngleAxisd(a, axis) * n;
    for (int c = 0; c < 3; ++c) out.pixel(p)[c] = m[c];
  }
  return out;
}

// Pinhole camera at the origin looking down +z with a constant-depth plane.
inline relumo::CameraView plane_camera(int w, int h, double depth, double f = 20.0) {
  relumo::CameraView cam;
  cam.intrinsics = {f, f, (w - 1) / 2.0, (h - 1) / 2.0};
  cam.depth = Image(w, h, 1, ColorSpace::Scalar, depth);
  return cam;
}

// A Lambertian plane at depth `depth` in front of camera a (identity pose),
// seen again by camera b with rotation rb and centre cb. Both views share
// the albedo colour and the world-fixed lighting `la` (given in a's frame).
struct TwoView {
  relumo::CameraView cam_a, cam_b;
  relumo::Decomposition a, b;
  Image image_a, image_b;
};

inline TwoView make_two_view(int w, int h, const Eigen::Matrix3d& rb,
                             const Eigen::Vector3d& cb, const ShLighting& la,
                             const Eigen::Vector3d& colour, double depth = 4.0) {
  TwoView t;
  t.cam_a = plane_camera(w, h, depth);
  t.cam_b = t.cam_a;
  t.cam_b.rotation = rb;
  t.cam_b.translation = -rb * cb;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Eigen::Vector3d ray = rb.transpose() * t.cam_b.unproject(x, y, 1.0);
      const double lambda = (depth - cb.z()) / ray.z();
      t.cam_b.depth.at(x, y) = lambda > 0.0 ? lambda : 0.0;
    }
  const Eigen::Matrix3d f = Eigen::Vector3d(1, -1, -1).asDiagonal();
  const Eigen::Vector3d nb = f * rb * Eigen::Vector3d(0, 0, -1);
  auto layers = [&](const Eigen::Vector3d& n, const ShLighting& l) {
    relumo::Decomposition d;
    d.albedo = Image(w, h, 3, ColorSpace::LinearRGB);
    d.normals = Image(w, h, 3, ColorSpace::Scalar);
    for (std::size_t p = 0; p < d.albedo.pixel_count(); ++p)
      for (int c = 0; c < 3; ++c) {
        d.albedo.pixel(p)[c] = colour[c];
        d.normals.pixel(p)[c] = n[c];
      }
    d.shadow = Image(w, h, 1, ColorSpace::Scalar, 1.0);
    d.lighting = l;
    d.mask = Mask(w, h, true);
    return d;
  };
  t.a = layers({0, 0, 1}, la);
  t.b = layers(nb, relumo::rotate_lighting(la, f * rb * f));
  t.image_a = relumo::lambertian(t.a);
  t.image_b = relumo::lambertian(t.b);
  t.a.residual = relumo::residual_of(t.image_a, t.image_a);
  t.b.residual = relumo::residual_of(t.image_b, t.image_b);
  return t;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("relumo-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// File name -> contents for every regular file below `dir`.
inline std::map<std::string, std::string> snapshot_dir(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[std::filesystem::relative(e.path(), dir).string()] = ss.str();
  }
  return out;
}

}  // namespace fixtures
