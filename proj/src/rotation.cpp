#include "relumo/rotation.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <string>

#include "relumo/error.hpp"

namespace relumo {

bool is_rotation(const Eigen::Matrix3d& r, double tol) {
  if (!r.allFinite()) return false;
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  return ortho < tol && std::abs(r.determinant() - 1.0) < tol;
}

void require_rotation(const Eigen::Matrix3d& r, const char* what) {
  if (!is_rotation(r))
    throw Error(std::string(what) +
                ": matrix is not a rotation (orthonormal, det +1)");
}

Eigen::Matrix3d axis_angle_rotation(const Eigen::Vector3d& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

double rotation_angle(const Eigen::Matrix3d& r) {
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  // acos loses precision near 0 and pi; atan2 of the skew part does not.
  const Eigen::Vector3d skew(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0),
                             r(1, 0) - r(0, 1));
  return std::atan2(0.5 * skew.norm(), c);
}

Eigen::Vector3d camera_to_normal_frame(const Eigen::Vector3d& v) {
  return {v.x(), -v.y(), -v.z()};
}

Eigen::Vector3d normal_to_camera_frame(const Eigen::Vector3d& v) {
  return {v.x(), -v.y(), -v.z()};
}

Eigen::Matrix3d camera_rotation_to_normal_frame(const Eigen::Matrix3d& r) {
  const Eigen::Matrix3d f = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
  return f * r * f;
}

}  // namespace relumo
