#include "vfollow/vnl.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "vfollow/rng.hpp"

namespace vfollow {

namespace {

constexpr double kDegenerateCross = 1e-12;

double angle_between(const Eigen::Vector3d& u, const Eigen::Vector3d& v) {
  return std::atan2(u.cross(v).norm(), u.dot(v));
}

std::optional<VirtualNormal> try_normal(const Point3& a, const Point3& b, const Point3& c) {
  const Eigen::Vector3d cross = (c - a).cross(b - a);
  const double norm = cross.norm();
  if (!(norm > kDegenerateCross)) return std::nullopt;
  Eigen::Vector3d n = cross / norm;
  bool flip = false;
  if (n.z() != 0.0) {
    flip = n.z() < 0.0;
  } else if (n.y() != 0.0) {
    flip = n.y() < 0.0;
  } else {
    flip = n.x() < 0.0;
  }
  if (flip) n = -n;
  return VirtualNormal{n};
}

std::optional<PointTriplet> draw_triplet(const std::vector<Point3>& cloud, const TripletConstraints& c, Rng& rng) {
  const std::uint64_t n = cloud.size();
  for (std::size_t attempt = 0; attempt < c.max_attempts_per_triplet; ++attempt) {
    const auto i = static_cast<std::size_t>(uniform_index(rng, n));
    const auto j = static_cast<std::size_t>(uniform_index(rng, n));
    const auto k = static_cast<std::size_t>(uniform_index(rng, n));
    if (i == j || j == k || i == k) continue;
    if (satisfies(c, cloud[i], cloud[j], cloud[k]) && try_normal(cloud[i], cloud[j], cloud[k])) {
      return PointTriplet{cloud[i], cloud[j], cloud[k], {i, j, k}};
    }
  }
  return std::nullopt;
}

struct SharedClouds {
  std::vector<Point3> gt;
  std::vector<Point3> pred;
};

SharedClouds shared_clouds(const CameraIntrinsics& intr, const DepthMap& pred, const DepthMap& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw Error(Errc::ShapeMismatch, "vnl: depth maps differ in shape");
  }
  SharedClouds out;
  for (std::size_t r = 0; r < gt.height(); ++r) {
    for (std::size_t col = 0; col < gt.width(); ++col) {
      if (!gt.valid(r, col) || !pred.valid(r, col)) continue;
      const Pixel px = cell_center(r, col);
      out.gt.push_back(back_project(intr, px, gt.depth(r, col)));
      out.pred.push_back(back_project(intr, px, pred.depth(r, col)));
    }
  }
  if (out.gt.size() < 3) throw Error(Errc::SamplingExhausted, "vnl: fewer than 3 cells valid in both maps");
  return out;
}

double triplet_loss(const SharedClouds& clouds, const PointTriplet& t) {
  const VirtualNormal gt_normal = triplet_normal(t);
  const auto& [i, j, k] = t.cells;
  const auto pred_normal = try_normal(clouds.pred[i], clouds.pred[j], clouds.pred[k]);
  if (!pred_normal) return 2.0;
  return (pred_normal->n - gt_normal.n).norm();
}

}  // namespace

void TripletConstraints::validate() const {
  if (!(beta_min > 0.0 && beta_min < alpha_max && alpha_max < std::numbers::pi)) {
    throw Error(Errc::InvalidArgument, "triplet constraints need 0 < beta_min < alpha_max < pi");
  }
  if (!(theta_min > 0.0)) throw Error(Errc::InvalidArgument, "theta_min must be positive");
  if (max_attempts_per_triplet == 0) throw Error(Errc::InvalidArgument, "max_attempts_per_triplet must be positive");
}

bool satisfies(const TripletConstraints& c, const Point3& a, const Point3& b, const Point3& cpt) {
  const Eigen::Vector3d ab = b - a, ac = cpt - a, bc = cpt - b;
  if (!(ab.norm() > c.theta_min && ac.norm() > c.theta_min && bc.norm() > c.theta_min)) return false;
  const double at_a = angle_between(ab, ac);
  const double at_b = angle_between(bc, -ab);
  return at_a >= c.beta_min && at_a <= c.alpha_max && at_b >= c.beta_min && at_b <= c.alpha_max;
}

std::vector<PointTriplet> sample_triplets(const std::vector<Point3>& cloud, const TripletConstraints& c,
                                          std::size_t n_groups, std::uint64_t seed) {
  c.validate();
  if (n_groups == 0) throw Error(Errc::InvalidArgument, "n_groups must be positive");
  if (cloud.size() < 3) throw Error(Errc::SamplingExhausted, "cloud has fewer than 3 points");

  std::vector<PointTriplet> out(n_groups);
  std::atomic<bool> exhausted{false};
  const auto n = static_cast<std::ptrdiff_t>(n_groups);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t g = 0; g < n; ++g) {
    if (exhausted.load(std::memory_order_relaxed)) continue;
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(g));
    auto t = draw_triplet(cloud, c, rng);
    if (t) {
      out[g] = *t;
    } else {
      exhausted.store(true, std::memory_order_relaxed);
    }
  }
  if (exhausted) {
    throw Error(Errc::SamplingExhausted, "no triplet satisfied the constraints within " +
                                             std::to_string(c.max_attempts_per_triplet) + " attempts");
  }
  return out;
}

VirtualNormal triplet_normal(const Point3& a, const Point3& b, const Point3& c) {
  auto n = try_normal(a, b, c);
  if (!n) throw Error(Errc::DegenerateTriplet, "triplet points are collinear");
  return *n;
}

VirtualNormal triplet_normal(const PointTriplet& t) { return triplet_normal(t.a, t.b, t.c); }

double vnl_loss(const std::vector<VirtualNormal>& pred, const std::vector<VirtualNormal>& gt) {
  if (pred.size() != gt.size()) throw Error(Errc::LengthMismatch, "vnl_loss: normal lists differ in length");
  if (pred.empty()) throw Error(Errc::LengthMismatch, "vnl_loss: empty normal lists");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i].n - gt[i].n).norm();
  return sum / static_cast<double>(pred.size());
}

namespace serial {

double vnl_between_depth_maps(const CameraIntrinsics& intr, const DepthMap& pred, const DepthMap& gt,
                              const TripletConstraints& c, std::size_t n_groups, std::uint64_t seed) {
  c.validate();
  if (n_groups == 0) throw Error(Errc::InvalidArgument, "n_groups must be positive");
  const SharedClouds clouds = shared_clouds(intr, pred, gt);
  double sum = 0.0;
  for (std::size_t g = 0; g < n_groups; ++g) {
    Rng rng = make_rng(seed, g);
    const auto t = draw_triplet(clouds.gt, c, rng);
    if (!t) throw Error(Errc::SamplingExhausted, "no triplet satisfied the constraints");
    sum += triplet_loss(clouds, *t);
  }
  return sum / static_cast<double>(n_groups);
}

}  // namespace serial

double vnl_between_depth_maps(const CameraIntrinsics& intr, const DepthMap& pred, const DepthMap& gt,
                              const TripletConstraints& c, std::size_t n_groups, std::uint64_t seed) {
  const SharedClouds clouds = shared_clouds(intr, pred, gt);
  const auto triplets = sample_triplets(clouds.gt, c, n_groups, seed);
  std::vector<double> losses(triplets.size());
  const auto n = static_cast<std::ptrdiff_t>(triplets.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t g = 0; g < n; ++g) losses[g] = triplet_loss(clouds, triplets[g]);
  // Summed in index order so the result is independent of the thread count.
  double sum = 0.0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(losses.size());
}

}  // namespace vfollow
