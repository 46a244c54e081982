#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "vfollow/geometry.hpp"

namespace vfollow {

/// Sampling constraints for virtual-normal triplets. The two angles at A and
/// B must lie in [beta_min, alpha_max]; every pairwise distance must exceed
/// theta_min.
struct TripletConstraints {
  double beta_min = std::numbers::pi / 6.0;         // 30 deg
  double alpha_max = 2.0 * std::numbers::pi / 3.0;  // 120 deg
  double theta_min = 0.6;                           // meters
  std::size_t max_attempts_per_triplet = 200;

  void validate() const;
};

struct PointTriplet {
  Point3 a, b, c;
  std::array<std::size_t, 3> cells{};  // indices into the cloud the triplet was drawn from
};

/// Unit plane normal with z >= 0 (ties broken on y, then x).
struct VirtualNormal {
  Eigen::Vector3d n = Eigen::Vector3d::UnitZ();
};

bool satisfies(const TripletConstraints& c, const Point3& a, const Point3& b, const Point3& cpt);

/// Rejection-samples `n_groups` triplets. Triplet i draws from its own random
/// stream derived from (seed, i), so the result does not depend on thread count.
/// `cells` in each triplet index into `cloud`.
std::vector<PointTriplet> sample_triplets(const std::vector<Point3>& cloud, const TripletConstraints& c,
                                          std::size_t n_groups, std::uint64_t seed);

VirtualNormal triplet_normal(const PointTriplet& t);
VirtualNormal triplet_normal(const Point3& a, const Point3& b, const Point3& c);

double vnl_loss(const std::vector<VirtualNormal>& pred, const std::vector<VirtualNormal>& gt);

/// Samples triplets on cells valid in both maps (anchored on the ground-truth
/// cloud) and compares normals at the same cells. A triplet that is degenerate
/// in the prediction costs the maximal 2.
double vnl_between_depth_maps(const CameraIntrinsics& intr, const DepthMap& pred, const DepthMap& gt,
                              const TripletConstraints& c, std::size_t n_groups, std::uint64_t seed);

namespace serial {
double vnl_between_depth_maps(const CameraIntrinsics& intr, const DepthMap& pred, const DepthMap& gt,
                              const TripletConstraints& c, std::size_t n_groups, std::uint64_t seed);
}

}  // namespace vfollow
