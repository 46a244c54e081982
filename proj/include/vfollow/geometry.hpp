#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "vfollow/error.hpp"

namespace vfollow {

using Point3 = Eigen::Vector3d;

/// Pinhole intrinsics. Pixel coordinates are continuous; the center of grid
/// cell (row r, column c) is the pixel (c + 0.5, r + 0.5).
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  /// Throws InvalidArgument unless fx > 0 and fy > 0.
  static CameraIntrinsics make(double fx, double fy, double cx, double cy);
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

inline Pixel cell_center(std::size_t row, std::size_t col) {
  return {static_cast<double>(col) + 0.5, static_cast<double>(row) + 0.5};
}

/// Rigid transform x' = R x + t. Construction checks orthonormality and det +1.
class Pose {
 public:
  Pose() = default;
  Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static Pose identity() { return {}; }

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
  Pose compose(const Pose& inner) const;  // this ∘ inner
  Pose inverse() const;

  /// Angle of R_a^T R_b in radians.
  static double angular_distance(const Pose& a, const Pose& b);

 private:
  Eigen::Matrix3d rotation_ = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

/// Dense metric depth with an explicit validity mask (row-major).
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(std::size_t width, std::size_t height);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return values_.size(); }

  bool valid(std::size_t row, std::size_t col) const { return valid_[index(row, col)] != 0; }
  double depth(std::size_t row, std::size_t col) const { return values_[index(row, col)]; }

  /// Stores `d`; non-positive or non-finite depths are stored as invalid.
  void set(std::size_t row, std::size_t col, double d);
  void invalidate(std::size_t row, std::size_t col);

  std::size_t index(std::size_t row, std::size_t col) const { return row * width_ + col; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<std::uint8_t>& mask() const { return valid_; }
  std::size_t valid_count() const;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> valid_;
};

Pixel project(const CameraIntrinsics& intr, const Point3& p);
Point3 back_project(const CameraIntrinsics& intr, const Pixel& px, double depth);

/// One point per valid cell, row-major. Throws EmptyDepthMap if no cell is valid.
std::vector<Point3> depth_map_to_cloud(const CameraIntrinsics& intr, const DepthMap& dm);

/// Cloud that remembers the flat cell index each point came from.
struct IndexedCloud {
  std::vector<Point3> points;
  std::vector<std::size_t> cells;
};

IndexedCloud depth_map_to_indexed_cloud(const CameraIntrinsics& intr, const DepthMap& dm);

namespace serial {
std::vector<Point3> depth_map_to_cloud(const CameraIntrinsics& intr, const DepthMap& dm);
}

}  // namespace vfollow
