#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "relumo/image.hpp"

namespace relumo {

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
};

// Pinhole camera: right-handed, z forward, y down, pixel centres at integer
// coordinates. Pose is world-to-camera: X_cam = R X_world + t. Depth is the
// z coordinate in the camera frame (metres), 0 marks invalid pixels.
struct CameraView {
  Intrinsics intrinsics;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Image depth;  // 1-channel Scalar, may be empty

  bool has_depth() const { return !depth.empty(); }
  Eigen::Vector2d project(const Eigen::Vector3d& camera_point) const;
  Eigen::Vector3d unproject(double u, double v, double z) const;
  Eigen::Vector3d to_world(const Eigen::Vector3d& camera_point) const;
  Eigen::Vector3d to_camera(const Eigen::Vector3d& world_point) const;
};

void validate(const CameraView& cam);

struct CrossProjectOptions {
  // |reprojected depth - source depth| < tolerance * reprojected depth.
  double depth_tolerance = 0.01;
};

struct Projection {
  Image image;
  Mask mask;
};

// Backward warp of `src` (seen by src_cam) into the pixel grid of dst_cam.
// Every destination pixel with valid depth is unprojected, moved into the
// source frame, projected and bilinearly sampled. The mask is set only where
// the sample lands in bounds, lies in front of the source camera and (when
// the source has depth) passes the relative depth-consistency gate.
Projection cross_project(const Image& src, const CameraView& src_cam,
                         const CameraView& dst_cam,
                         const CrossProjectOptions& options = {});

// R_ab = R_a R_b^T: takes camera-b-frame directions to camera-a-frame.
Eigen::Matrix3d relative_rotation(const CameraView& a, const CameraView& b);

struct GroundTruth {
  Image image;
  Mask mask;
  Image count;  // per-pixel number of contributing views
};

// Mean over all valid cross-projections of `views` into dst_cam. Per-pixel
// contributions are summed in sorted order, so the result does not depend
// on the order of `views`.
GroundTruth make_gt_relit(
    const std::vector<std::pair<Image, CameraView>>& views,
    const CameraView& dst_cam, const CrossProjectOptions& options = {});

// Normals (normal frame: x right, y up, z toward viewer) from central
// differences of the back-projected depth map, one-sided next to invalid or
// out-of-raster neighbours. Pixels with no usable neighbour get (0,0,1).
Image normals_from_depth(const CameraView& cam);

// cameras.json: [{image, fx, fy, cx, cy, R[9] row-major, t[3], depth_file,
// optional mask, optional condition}, ...]. Relative paths resolve against
// the directory containing the JSON file.
struct CameraRecord {
  std::filesystem::path image;
  std::filesystem::path depth_file;
  std::filesystem::path mask;  // empty when absent
  std::optional<int> condition;
  CameraView camera;  // depth left empty until load_depth
};

std::vector<CameraRecord> load_camera_records(const std::filesystem::path& json);
// Loads the record's depth map into its camera.
CameraView load_camera(const CameraRecord& record);

}  // namespace relumo
