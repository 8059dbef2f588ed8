#pragma once

#include <Eigen/Core>

namespace relumo {

bool is_rotation(const Eigen::Matrix3d& r, double tol = 1e-6);
// Throws relumo::Error naming `what` when r is not orthonormal with det +1.
void require_rotation(const Eigen::Matrix3d& r, const char* what);

Eigen::Matrix3d axis_angle_rotation(const Eigen::Vector3d& axis, double angle);
// Rotation angle in radians, in [0, pi].
double rotation_angle(const Eigen::Matrix3d& r);

// Camera frames are x right, y down, z forward; normal maps and lighting
// live in x right, y up, z toward the viewer. The two differ by
// diag(1,-1,-1), which is its own inverse.
Eigen::Vector3d camera_to_normal_frame(const Eigen::Vector3d& v);
Eigen::Vector3d normal_to_camera_frame(const Eigen::Vector3d& v);
Eigen::Matrix3d camera_rotation_to_normal_frame(const Eigen::Matrix3d& r);

}  // namespace relumo
