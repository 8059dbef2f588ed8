#include "relumo/camera.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "relumo/error.hpp"
#include "relumo/image_io.hpp"
#include "relumo/resample.hpp"
#include "relumo/rotation.hpp"

namespace relumo {

Eigen::Vector2d CameraView::project(const Eigen::Vector3d& p) const {
  return {intrinsics.fx * p.x() / p.z() + intrinsics.cx,
          intrinsics.fy * p.y() / p.z() + intrinsics.cy};
}

Eigen::Vector3d CameraView::unproject(double u, double v, double z) const {
  return {z * (u - intrinsics.cx) / intrinsics.fx,
          z * (v - intrinsics.cy) / intrinsics.fy, z};
}

Eigen::Vector3d CameraView::to_world(const Eigen::Vector3d& p) const {
  return rotation.transpose() * (p - translation);
}

Eigen::Vector3d CameraView::to_camera(const Eigen::Vector3d& p) const {
  return rotation * p + translation;
}

void validate(const CameraView& cam) {
  if (!(cam.intrinsics.fx > 0.0 && cam.intrinsics.fy > 0.0))
    throw Error("camera focal lengths must be positive");
  require_rotation(cam.rotation, "camera rotation");
  if (!cam.translation.allFinite()) throw Error("camera translation not finite");
  if (cam.has_depth()) {
    if (cam.depth.channels() != 1) throw Error("depth map must be 1-channel");
    for (double d : cam.depth.data())
      if (!std::isfinite(d) || d < 0.0)
        throw Error("depth must be finite and non-negative");
  }
}

Projection cross_project(const Image& src, const CameraView& src_cam,
                         const CameraView& dst_cam,
                         const CrossProjectOptions& options) {
  if (!dst_cam.has_depth())
    throw Error("cross_project: missing depth for the destination view");
  validate(src_cam);
  validate(dst_cam);
  if (src_cam.has_depth()) require_same_size(src, src_cam.depth, "cross_project");
  const int w = dst_cam.depth.width();
  const int h = dst_cam.depth.height();
  Projection out{Image(w, h, src.channels(), src.space()), Mask(w, h)};
  // Composite transform dst camera -> src camera.
  const Eigen::Matrix3d rot = src_cam.rotation * dst_cam.rotation.transpose();
  const Eigen::Vector3d trans =
      src_cam.translation - rot * dst_cam.translation;

#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    std::vector<double> sample(static_cast<std::size_t>(src.channels()));
    for (int x = 0; x < w; ++x) {
      const double z = dst_cam.depth.at(x, y);
      if (!(z > 0.0)) continue;
      const Eigen::Vector3d p = rot * dst_cam.unproject(x, y, z) + trans;
      if (!(p.z() > 0.0)) continue;
      const Eigen::Vector2d uv = src_cam.project(p);
      if (!sample_bilinear(src, uv.x(), uv.y(), sample)) continue;
      if (src_cam.has_depth()) {
        const int sx = std::clamp(static_cast<int>(std::lround(uv.x())), 0,
                                  src.width() - 1);
        const int sy = std::clamp(static_cast<int>(std::lround(uv.y())), 0,
                                  src.height() - 1);
        const double sd = src_cam.depth.at(sx, sy);
        if (!(sd > 0.0) ||
            std::abs(p.z() - sd) >= options.depth_tolerance * p.z())
          continue;
      }
      for (int c = 0; c < src.channels(); ++c) out.image.at(x, y, c) = sample[c];
      out.mask.set(x, y, true);
    }
  }
  return out;
}

Eigen::Matrix3d relative_rotation(const CameraView& a, const CameraView& b) {
  return a.rotation * b.rotation.transpose();
}

GroundTruth make_gt_relit(
    const std::vector<std::pair<Image, CameraView>>& views,
    const CameraView& dst_cam, const CrossProjectOptions& options) {
  if (views.empty()) throw Error("make_gt_relit: no target views");
  std::vector<Projection> projections;
  projections.reserve(views.size());
  for (const auto& [img, cam] : views)
    projections.push_back(cross_project(img, cam, dst_cam, options));
  const int w = dst_cam.depth.width();
  const int h = dst_cam.depth.height();
  const int ch = views.front().first.channels();
  for (const auto& [img, cam] : views)
    if (img.channels() != ch) throw Error("make_gt_relit: channel mismatch");
  GroundTruth out{Image(w, h, ch, views.front().first.space()), Mask(w, h),
                  Image(w, h, 1, ColorSpace::Scalar)};
  std::size_t covered = 0;
  std::vector<double> values;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int n = 0;
      for (const auto& proj : projections) n += proj.mask(x, y) ? 1 : 0;
      if (n == 0) continue;
      ++covered;
      out.mask.set(x, y, true);
      out.count.at(x, y) = n;
      for (int c = 0; c < ch; ++c) {
        values.clear();
        for (const auto& proj : projections)
          if (proj.mask(x, y)) values.push_back(proj.image.at(x, y, c));
        std::sort(values.begin(), values.end());
        double sum = 0.0;
        for (double v : values) sum += v;
        out.image.at(x, y, c) = sum / n;
      }
    }
  if (covered == 0) throw Error("make_gt_relit: zero overlap with destination");
  return out;
}

Image normals_from_depth(const CameraView& cam) {
  if (!cam.has_depth()) throw Error("normals_from_depth: camera has no depth");
  const Image& depth = cam.depth;
  const int w = depth.width();
  const int h = depth.height();
  Image out(w, h, 3, ColorSpace::Scalar);
  for (std::size_t p = 0; p < out.pixel_count(); ++p) out.pixel(p)[2] = 1.0;
  auto point = [&](int x, int y) {
    return cam.unproject(x, y, depth.at(x, y));
  };
  auto valid = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < w && y < h && depth.at(x, y) > 0.0;
  };
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!valid(x, y)) continue;
      // One-sided differences where a neighbour is missing.
      const int xl = valid(x - 1, y) ? x - 1 : x;
      const int xr = valid(x + 1, y) ? x + 1 : x;
      const int yu = valid(x, y - 1) ? y - 1 : y;
      const int yd = valid(x, y + 1) ? y + 1 : y;
      if (xl == xr || yu == yd) continue;
      const Eigen::Vector3d dx = point(xr, y) - point(xl, y);
      const Eigen::Vector3d dy = point(x, yd) - point(x, yu);
      Eigen::Vector3d n = dy.cross(dx);  // camera frame, toward the camera
      if (!(n.norm() > 0.0)) continue;
      n.normalize();
      if (n.z() > 0.0) n = -n;
      const Eigen::Vector3d nf = camera_to_normal_frame(n);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = nf[c];
    }
  return out;
}

std::vector<CameraRecord> load_camera_records(const std::filesystem::path& json) {
  std::ifstream in(json);
  if (!in) throw IoError("cannot read camera file '" + json.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(json.string() + ": " + e.what());
  }
  const auto base = json.parent_path();
  const nlohmann::json& list = doc.is_object() && doc.contains("views")
                                   ? doc.at("views")
                                   : doc;
  if (!list.is_array()) throw IoError(json.string() + ": expected a view list");
  std::vector<CameraRecord> out;
  try {
    for (const auto& v : list) {
      CameraRecord rec;
      rec.image = base / v.at("image").get<std::string>();
      if (v.contains("depth_file") && !v.at("depth_file").is_null())
        rec.depth_file = base / v.at("depth_file").get<std::string>();
      if (v.contains("mask") && !v.at("mask").is_null())
        rec.mask = base / v.at("mask").get<std::string>();
      if (v.contains("condition")) rec.condition = v.at("condition").get<int>();
      rec.camera.intrinsics = {v.at("fx").get<double>(), v.at("fy").get<double>(),
                               v.at("cx").get<double>(), v.at("cy").get<double>()};
      const auto r = v.at("R").get<std::vector<double>>();
      const auto t = v.at("t").get<std::vector<double>>();
      if (r.size() != 9 || t.size() != 3)
        throw IoError(json.string() + ": R needs 9 and t needs 3 entries");
      for (int i = 0; i < 9; ++i) rec.camera.rotation(i / 3, i % 3) = r[i];
      rec.camera.translation = {t[0], t[1], t[2]};
      out.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(json.string() + ": " + e.what());
  }
  return out;
}

CameraView load_camera(const CameraRecord& record) {
  CameraView cam = record.camera;
  if (!record.depth_file.empty()) {
    Image depth = load_image(record.depth_file, ImageFormat::PFM);
    if (depth.channels() != 1)
      throw IoError(record.depth_file.string() + ": depth must be 1-channel");
    cam.depth = depth.with_space(ColorSpace::Scalar);
  }
  validate(cam);
  return cam;
}

}  // namespace relumo
