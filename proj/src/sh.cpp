#include "relumo/sh.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "relumo/color.hpp"
#include "relumo/error.hpp"
#include "relumo/rotation.hpp"

namespace relumo {

namespace {

constexpr double kShadowFloor = 1e-3;
constexpr double kMaxCondition = 1e10;
constexpr int kRotationSamples = 64;

// Pseudo-inverse of the basis evaluated at the fixed rotation samples.
struct RotationFit {
  std::vector<Eigen::Vector3d> samples;
  Eigen::Matrix<double, 9, Eigen::Dynamic> pinv;
};

const RotationFit& rotation_fit() {
  static const RotationFit fit = [] {
    RotationFit f;
    f.samples = fibonacci_sphere(kRotationSamples);
    Eigen::MatrixXd design(kRotationSamples, 9);
    for (int k = 0; k < kRotationSamples; ++k)
      design.row(k) = sh_basis_unchecked(f.samples[k]).transpose();
    f.pinv = design.completeOrthogonalDecomposition().pseudoInverse();
    return f;
  }();
  return fit;
}

double triangular_condition(const Eigen::MatrixXd& r) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return std::numeric_limits<double>::infinity();
  const double smallest = sv[sv.size() - 1];
  return smallest > 0.0 ? sv[0] / smallest
                        : std::numeric_limits<double>::infinity();
}

}  // namespace

ShVector ShLighting::flatten() const {
  ShVector v;
  for (int c = 0; c < 3; ++c)
    for (int j = 0; j < 9; ++j) v[c * 9 + j] = coeffs(c, j);
  return v;
}

ShLighting ShLighting::from_flat(const ShVector& v) {
  ShLighting l;
  for (int c = 0; c < 3; ++c)
    for (int j = 0; j < 9; ++j) l.coeffs(c, j) = v[c * 9 + j];
  return l;
}

ShLighting ShLighting::from_flat(const std::vector<double>& v) {
  if (v.size() != 27)
    throw Error("SH lighting needs 27 coefficients, got " +
                std::to_string(v.size()));
  ShVector flat;
  for (int i = 0; i < 27; ++i) flat[i] = v[i];
  return from_flat(flat);
}

ShLighting ShLighting::ambient(double r, double g, double b) {
  ShLighting l;
  l.coeffs(0, 0) = r;
  l.coeffs(1, 0) = g;
  l.coeffs(2, 0) = b;
  return l;
}

Eigen::Vector3d ShLighting::evaluate(const Eigen::Vector3d& n) const {
  return coeffs * sh_basis_unchecked(n);
}

ShLighting operator*(double s, const ShLighting& l) {
  ShLighting out;
  out.coeffs = s * l.coeffs;
  return out;
}

ShBasis sh_basis_unchecked(const Eigen::Vector3d& n) {
  const double x = n.x(), y = n.y(), z = n.z();
  ShBasis b;
  b << 1.0, y, z, x, x * y, y * z, 3.0 * z * z - 1.0, x * z, x * x - y * y;
  return b;
}

ShBasis sh_basis(const Eigen::Vector3d& n) {
  if (!(std::abs(n.norm() - 1.0) <= 1e-6))
    throw Error("sh_basis: normal is not unit length");
  return sh_basis_unchecked(n);
}

ShBasisJacobian sh_basis_jacobian(const Eigen::Vector3d& n) {
  const double x = n.x(), y = n.y(), z = n.z();
  ShBasisJacobian j;
  //     d/dx      d/dy       d/dz
  j << 0.0,      0.0,       0.0,
       0.0,      1.0,       0.0,
       0.0,      0.0,       1.0,
       1.0,      0.0,       0.0,
       y,        x,         0.0,
       0.0,      z,         y,
       0.0,      0.0,       6.0 * z,
       z,        0.0,       x,
       2.0 * x,  -2.0 * y,  0.0;
  return j;
}

Image shade(const Image& normals, const ShLighting& lighting) {
  if (normals.channels() != 3) throw Error("shade: normal map needs 3 channels");
  Image out = normals.like(3, ColorSpace::LinearRGB);
  const auto n = static_cast<std::ptrdiff_t>(normals.pixel_count());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    auto src = normals.pixel(static_cast<std::size_t>(p));
    const ShBasis b = sh_basis_unchecked({src[0], src[1], src[2]});
    auto dst = out.pixel(static_cast<std::size_t>(p));
    for (int c = 0; c < 3; ++c)
      dst[c] = std::max(0.0, lighting.coeffs.row(c).dot(b));
  }
  return out;
}

ShSubspace ShSubspace::identity() {
  ShSubspace s;
  s.basis = Eigen::MatrixXd::Identity(27, 27);
  return s;
}

ShVector ShSubspace::project(const ShVector& v) const {
  const Eigen::VectorXd w = basis.transpose() * (v - mean);
  return mean + basis * w;
}

ShSubspace build_subspace(const std::vector<ShLighting>& samples, int k) {
  if (k < 0 || k > 27) throw Error("subspace dimension must lie in [0,27]");
  if (static_cast<std::size_t>(k) > samples.size())
    throw Error("subspace dimension k exceeds the sample count");
  if (samples.empty()) throw Error("build_subspace: no samples");
  ShSubspace out;
  for (const auto& s : samples) out.mean += s.flatten();
  out.mean /= static_cast<double>(samples.size());
  Eigen::Matrix<double, 27, 27> cov = Eigen::Matrix<double, 27, 27>::Zero();
  for (const auto& s : samples) {
    const ShVector d = s.flatten() - out.mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(samples.size());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 27, 27>> eig(cov);
  out.basis.resize(27, k);
  double total = 0.0;
  for (int i = 0; i < 27; ++i) total += std::max(0.0, eig.eigenvalues()[i]);
  for (int i = 0; i < k; ++i) {
    const int src = 26 - i;  // eigenvalues ascend
    out.basis.col(i) = eig.eigenvectors().col(src);
    const double var = std::max(0.0, eig.eigenvalues()[src]);
    out.variances.push_back(var);
    out.explained_fraction.push_back(total > 0.0 ? var / total : 0.0);
  }
  return out;
}

LightingEstimate estimate_lighting(const Image& img, const Image& albedo,
                                   const Image& normals, const Image& shadow,
                                   const Mask& mask,
                                   const ShSubspace* subspace) {
  require_same_size(img, albedo, "estimate_lighting");
  require_same_size(img, normals, "estimate_lighting");
  require_same_size(img, shadow, "estimate_lighting");
  require_same_size(img, mask, "estimate_lighting");
  if (img.channels() != 3 || albedo.channels() != 3 || normals.channels() != 3)
    throw Error("estimate_lighting: image, albedo and normals need 3 channels");

  std::vector<std::size_t> pixels;
  for (std::size_t p = 0; p < mask.pixel_count(); ++p)
    if (mask[p]) pixels.push_back(p);
  if (pixels.empty()) throw Error("estimate_lighting: empty mask");
  if (pixels.size() < 9)
    throw Error("estimate_lighting: need at least 9 foreground pixels");

  const auto count = static_cast<std::ptrdiff_t>(pixels.size());
  std::vector<ShBasis> basis(pixels.size());
  Eigen::MatrixXd target(pixels.size(), 3);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    const std::size_t p = pixels[static_cast<std::size_t>(k)];
    auto n = normals.pixel(p);
    basis[k] = sh_basis({n[0], n[1], n[2]});
    const double s = std::max(shadow.pixel(p)[0], kShadowFloor);
    for (int c = 0; c < 3; ++c)
      target(k, c) = std::min(1.0, img.pixel(p)[c] / s);
  }

  LightingEstimate out;
  out.pixels = pixels.size();
  if (subspace == nullptr) {
    for (int c = 0; c < 3; ++c) {
      Eigen::MatrixXd design(pixels.size(), 9);
      for (std::ptrdiff_t k = 0; k < count; ++k)
        design.row(k) = albedo.pixel(pixels[k])[c] * basis[k].transpose();
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
      const Eigen::MatrixXd r =
          qr.matrixR().topLeftCorner(9, 9).triangularView<Eigen::Upper>();
      const double cond = triangular_condition(r);
      out.condition_number = std::max(out.condition_number, cond);
      if (!(cond <= kMaxCondition))
        throw NumericalError("estimate_lighting: rank-deficient system "
                             "(condition number " + std::to_string(cond) + ")");
      out.lighting.coeffs.row(c) = qr.solve(target.col(c)).transpose();
    }
    return out;
  }

  const int dim = subspace->dimension();
  if (dim == 0) {
    out.lighting = ShLighting::from_flat(subspace->mean);
    return out;
  }
  Eigen::MatrixXd design(3 * pixels.size(), dim);
  Eigen::VectorXd rhs(3 * pixels.size());
  for (std::ptrdiff_t k = 0; k < count; ++k)
    for (int c = 0; c < 3; ++c) {
      const double a = albedo.pixel(pixels[k])[c];
      const auto rows = subspace->basis.middleRows(c * 9, 9);
      design.row(3 * k + c) = a * (basis[k].transpose() * rows);
      rhs[3 * k + c] =
          target(k, c) - a * basis[k].dot(subspace->mean.segment<9>(c * 9));
    }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  const Eigen::MatrixXd r =
      qr.matrixR().topLeftCorner(dim, dim).triangularView<Eigen::Upper>();
  out.condition_number = triangular_condition(r);
  if (!(out.condition_number <= kMaxCondition))
    throw NumericalError("estimate_lighting: rank-deficient subspace system "
                         "(condition number " +
                         std::to_string(out.condition_number) + ")");
  const Eigen::VectorXd w = qr.solve(rhs);
  out.lighting = ShLighting::from_flat(ShVector(subspace->mean + subspace->basis * w));
  return out;
}

ShRotation sh_rotation_matrix(const Eigen::Matrix3d& r) {
  require_rotation(r, "sh_rotation_matrix");
  const RotationFit& fit = rotation_fit();
  Eigen::MatrixXd rotated(kRotationSamples, 9);
  for (int k = 0; k < kRotationSamples; ++k)
    rotated.row(k) = sh_basis_unchecked(r * fit.samples[k]).transpose();
  return (fit.pinv * rotated).transpose();
}

ShLighting rotate_lighting(const ShLighting& lighting, const Eigen::Matrix3d& r) {
  require_rotation(r, "rotate_lighting");
  ShLighting out;
  out.coeffs = lighting.coeffs * sh_rotation_matrix(r.transpose());
  // The constant basis function is invariant; keep its column exact.
  out.coeffs.col(0) = lighting.coeffs.col(0);
  return out;
}

Eigen::Vector3d dominant_light_direction(const ShLighting& lighting) {
  const Eigen::Vector3d w(kLumaR, kLumaG, kLumaB);
  Eigen::Vector3d d = Eigen::Vector3d::Zero();
  for (int c = 0; c < 3; ++c)
    d += w[c] * Eigen::Vector3d(lighting.coeffs(c, 3), lighting.coeffs(c, 1),
                                lighting.coeffs(c, 2));
  const double scale = std::max(1.0, lighting.coeffs.cwiseAbs().maxCoeff());
  if (!(d.norm() > 1e-12 * scale))
    throw NumericalError("no directional component");
  return d.normalized();
}

ShLighting directional_lighting(const Eigen::Vector3d& dir,
                                const Eigen::Vector3d& colour,
                                const Eigen::Vector3d& ambient) {
  if (!(dir.norm() > 0.0)) throw Error("directional_lighting: zero direction");
  const Eigen::Vector3d d = dir.normalized();
  const double x = d.x(), y = d.y(), z = d.z();
  // (n.d)^2 in the basis, using x^2 = (1 - z^2 + b8)/2, y^2 = (1 - z^2 - b8)/2
  // and z^2 = (b6 + 1)/3 on the unit sphere.
  ShBasis sq = ShBasis::Zero();
  const double zz = z * z - (x * x + y * y) / 2.0;
  sq[0] = (x * x + y * y) / 2.0 + zz / 3.0;
  sq[6] = zz / 3.0;
  sq[8] = (x * x - y * y) / 2.0;
  sq[4] = 2.0 * x * y;
  sq[5] = 2.0 * y * z;
  sq[7] = 2.0 * x * z;
  ShBasis lobe = ShBasis::Zero();
  lobe[0] = 0.25 - 5.0 / 32.0;
  lobe[1] = 0.5 * y;
  lobe[2] = 0.5 * z;
  lobe[3] = 0.5 * x;
  lobe += (15.0 / 32.0) * sq;
  ShLighting l;
  for (int c = 0; c < 3; ++c) {
    l.coeffs.row(c) = colour[c] * lobe.transpose();
    l.coeffs(c, 0) += ambient[c];
  }
  return l;
}

std::vector<Eigen::Vector3d> fibonacci_sphere(int count) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    out.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return out;
}

}  // namespace relumo
