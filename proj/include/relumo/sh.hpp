#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "relumo/image.hpp"

namespace relumo {

// Order-2 real polynomial basis, unnormalised:
//   [1, y, z, x, xy, yz, 3z^2 - 1, xz, x^2 - y^2]
// Normalisation constants are absorbed into the lighting coefficients.
using ShBasis = Eigen::Matrix<double, 9, 1>;
using ShBasisJacobian = Eigen::Matrix<double, 9, 3>;
using ShRotation = Eigen::Matrix<double, 9, 9>;
using ShVector = Eigen::Matrix<double, 27, 1>;

inline constexpr int kShCoeffs = 9;
inline constexpr const char* kShConvention = "poly-v1";

// 3x9 lighting matrix: rows are R, G, B; columns the basis functions.
struct ShLighting {
  Eigen::Matrix<double, 3, 9> coeffs = Eigen::Matrix<double, 3, 9>::Zero();

  // Row-major flattening: R row, then G, then B.
  ShVector flatten() const;
  static ShLighting from_flat(const ShVector& v);
  static ShLighting from_flat(const std::vector<double>& v);
  static ShLighting ambient(double r, double g, double b);

  Eigen::Vector3d evaluate(const Eigen::Vector3d& n) const;

  friend bool operator==(const ShLighting& a, const ShLighting& b) {
    return a.coeffs == b.coeffs;
  }
};

ShLighting operator*(double s, const ShLighting& l);

// Throws when |n| deviates from 1 by more than 1e-6.
ShBasis sh_basis(const Eigen::Vector3d& n);
// The polynomial evaluated without the unit-length check.
ShBasis sh_basis_unchecked(const Eigen::Vector3d& n);
// d b / d n of the polynomial basis (treating n as unconstrained).
ShBasisJacobian sh_basis_jacobian(const Eigen::Vector3d& n);

// Per-pixel L b(n), clamped at 0 from below. `normals` is a 3-channel map.
Image shade(const Image& normals, const ShLighting& lighting);

// Optional linear subspace for the flattened 27-vector: L = mean + basis w.
struct ShSubspace {
  ShVector mean = ShVector::Zero();
  Eigen::MatrixXd basis;  // 27 x k, orthonormal columns
  std::vector<double> variances;           // eigenvalues, descending
  std::vector<double> explained_fraction;  // variances / total

  int dimension() const { return static_cast<int>(basis.cols()); }
  static ShSubspace identity();
  ShVector project(const ShVector& v) const;  // mean + B B^T (v - mean)
};

ShSubspace build_subspace(const std::vector<ShLighting>& samples, int k);

struct LightingEstimate {
  ShLighting lighting;
  double condition_number = 0.0;  // of the least-squares design matrix
  std::size_t pixels = 0;
};

// Least squares over foreground pixels of
//   || min(1, i(p)/s(p)) - albedo(p) (L b(n(p))) ||^2.
// Shadow values are clamped below at 1e-3. With a subspace the solve is over
// the subspace coordinates (hard constraint). Throws NumericalError when the
// design is rank deficient (condition number > 1e10).
LightingEstimate estimate_lighting(const Image& img, const Image& albedo,
                                   const Image& normals, const Image& shadow,
                                   const Mask& mask,
                                   const ShSubspace* subspace = nullptr);

// 9x9 operator with b(R n) = M b(n) for unit n. Built by least squares over
// fixed well-spread sample directions; exact because each rotated basis
// function is again a degree-2 polynomial.
ShRotation sh_rotation_matrix(const Eigen::Matrix3d& r);

// L' with L' b(n) = L b(R^-1 n), i.e. the lighting environment rotated by R.
ShLighting rotate_lighting(const ShLighting& lighting, const Eigen::Matrix3d& r);

// Luminance-weighted linear band (x, y, z columns), normalised. Throws
// NumericalError("no directional component") when the band vanishes.
Eigen::Vector3d dominant_light_direction(const ShLighting& lighting);

// Order-2 projection of a directional light: shading
//   ambient + colour * max(0, n . dir)
// with the clamped cosine replaced by its Legendre expansion
// 1/4 + t/2 + (5/16)(3t^2 - 1)/2. `dir` points toward the light.
ShLighting directional_lighting(const Eigen::Vector3d& dir,
                                const Eigen::Vector3d& colour,
                                const Eigen::Vector3d& ambient);

// Deterministic, near-uniform unit directions (golden-angle spiral).
std::vector<Eigen::Vector3d> fibonacci_sphere(int count);

}  // namespace relumo
