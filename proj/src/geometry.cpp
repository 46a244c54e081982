#include "vfollow/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace vfollow {

namespace {
constexpr double kRotationTol = 1e-9;
}

CameraIntrinsics CameraIntrinsics::make(double fx, double fy, double cx, double cy) {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy) ||
      !std::isfinite(cx) || !std::isfinite(cy)) {
    throw Error(Errc::InvalidArgument, "intrinsics require finite fx > 0 and fy > 0");
  }
  return {fx, fy, cx, cy};
}

Pose::Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  const double det = rotation.determinant();
  if (!(ortho <= kRotationTol) || !(std::abs(det - 1.0) <= kRotationTol)) {
    throw Error(Errc::InvalidArgument, "pose rotation is not a proper orthonormal matrix (orthogonality error " +
                                           std::to_string(ortho) + ", det " + std::to_string(det) + ")");
  }
  if (!translation.allFinite()) throw Error(Errc::InvalidArgument, "pose translation is not finite");
}

Pose Pose::compose(const Pose& inner) const {
  Pose out;
  out.rotation_ = rotation_ * inner.rotation_;
  out.translation_ = rotation_ * inner.translation_ + translation_;
  return out;
}

Pose Pose::inverse() const {
  Pose out;
  out.rotation_ = rotation_.transpose();
  out.translation_ = -(rotation_.transpose() * translation_);
  return out;
}

double Pose::angular_distance(const Pose& a, const Pose& b) {
  const Eigen::Matrix3d rel = a.rotation_.transpose() * b.rotation_;
  // Angle from the skew part stays accurate near zero where acos(trace) does not.
  const Eigen::Vector3d skew(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  const double s = 0.5 * skew.norm();
  const double c = 0.5 * (rel.trace() - 1.0);
  return std::atan2(s, c);
}

DepthMap::DepthMap(std::size_t width, std::size_t height)
    : width_(width), height_(height), values_(width * height, 0.0), valid_(width * height, 0) {
  if (width == 0 || height == 0) throw Error(Errc::InvalidArgument, "depth map dimensions must be positive");
}

void DepthMap::set(std::size_t row, std::size_t col, double d) {
  const std::size_t i = index(row, col);
  if (std::isfinite(d) && d > 0.0) {
    values_[i] = d;
    valid_[i] = 1;
  } else {
    values_[i] = 0.0;
    valid_[i] = 0;
  }
}

void DepthMap::invalidate(std::size_t row, std::size_t col) {
  const std::size_t i = index(row, col);
  values_[i] = 0.0;
  valid_[i] = 0;
}

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{1}));
}

Pixel project(const CameraIntrinsics& intr, const Point3& p) {
  if (!(p.z() > 0.0)) throw Error(Errc::NonPositiveDepth, "cannot project a point with z <= 0");
  return {intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy};
}

Point3 back_project(const CameraIntrinsics& intr, const Pixel& px, double depth) {
  if (!(depth > 0.0)) throw Error(Errc::NonPositiveDepth, "back-projection needs depth > 0");
  return {depth * (px.u - intr.cx) / intr.fx, depth * (px.v - intr.cy) / intr.fy, depth};
}

namespace serial {

std::vector<Point3> depth_map_to_cloud(const CameraIntrinsics& intr, const DepthMap& dm) {
  std::vector<Point3> cloud;
  for (std::size_t r = 0; r < dm.height(); ++r) {
    for (std::size_t c = 0; c < dm.width(); ++c) {
      if (dm.valid(r, c)) cloud.push_back(back_project(intr, cell_center(r, c), dm.depth(r, c)));
    }
  }
  if (cloud.empty()) throw Error(Errc::EmptyDepthMap, "depth map has no valid cells");
  return cloud;
}

}  // namespace serial

IndexedCloud depth_map_to_indexed_cloud(const CameraIntrinsics& intr, const DepthMap& dm) {
  const auto& mask = dm.mask();
  // Exclusive prefix sum of the mask gives every valid cell its output slot.
  std::vector<std::size_t> slot(mask.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    slot[i] = total;
    total += mask[i];
  }
  if (total == 0) throw Error(Errc::EmptyDepthMap, "depth map has no valid cells");

  IndexedCloud out;
  out.points.resize(total);
  out.cells.resize(total);
  const auto& values = dm.values();
  const auto width = static_cast<std::ptrdiff_t>(dm.width());
  const auto n = static_cast<std::ptrdiff_t>(mask.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const double d = values[i];
    const double u = static_cast<double>(i % width) + 0.5;
    const double v = static_cast<double>(i / width) + 0.5;
    out.points[slot[i]] = Point3(d * (u - intr.cx) / intr.fx, d * (v - intr.cy) / intr.fy, d);
    out.cells[slot[i]] = static_cast<std::size_t>(i);
  }
  return out;
}

std::vector<Point3> depth_map_to_cloud(const CameraIntrinsics& intr, const DepthMap& dm) {
  return depth_map_to_indexed_cloud(intr, dm).points;
}

}  // namespace vfollow
