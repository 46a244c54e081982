#include "vfollow/pnp.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>
#include <string>

namespace vfollow {

namespace {

// Ratio of the 11th to the largest singular value below which the stacked
// system is treated as rank deficient (coplanar or collinear points).
constexpr double kRankTolerance = 1e-9;

struct Similarity3 {
  Eigen::Vector3d centroid;
  double scale;
};

Similarity3 conditioning_3d(const std::vector<Correspondence>& corrs) {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& c : corrs) centroid += c.world;
  centroid /= static_cast<double>(corrs.size());
  double mean_dist = 0.0;
  for (const auto& c : corrs) mean_dist += (c.world - centroid).norm();
  mean_dist /= static_cast<double>(corrs.size());
  if (!(mean_dist > 0.0)) throw Error(Errc::DegenerateConfiguration, "all 3D points coincide");
  return {centroid, std::sqrt(3.0) / mean_dist};
}

// Isotropic similarity taking the normalized image points to zero mean and
// mean distance sqrt(2).
Eigen::Matrix3d conditioning_2d(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  const double s = mean_dist > 0.0 ? std::sqrt(2.0) / mean_dist : 1.0;
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(0, 0) = s;
  t(1, 1) = s;
  t(0, 2) = -s * centroid.x();
  t(1, 2) = -s * centroid.y();
  return t;
}

double reprojection_rms(const Pose& pose, const std::vector<Correspondence>& corrs, const CameraIntrinsics& intr) {
  double sum = 0.0;
  for (const auto& c : corrs) {
    const Point3 p = pose.apply(c.world);
    if (!(p.z() > 0.0)) return std::numeric_limits<double>::infinity();
    const Pixel px = project(intr, p);
    const double du = px.u - c.image.u, dv = px.v - c.image.v;
    sum += du * du + dv * dv;
  }
  return std::sqrt(sum / static_cast<double>(corrs.size()));
}

}  // namespace

PnPSolution solve_pnp(const std::vector<Correspondence>& corrs, const CameraIntrinsics& intr, const PnPOptions& opts) {
  const std::size_t n = corrs.size();
  if (n < kMinPnPPoints) {
    throw Error(Errc::InsufficientPoints,
                "insufficient points (" + std::to_string(n) + " < " + std::to_string(kMinPnPPoints) + ")");
  }

  std::vector<Eigen::Vector2d> rays(n);
  for (std::size_t i = 0; i < n; ++i) {
    rays[i] = {(corrs[i].image.u - intr.cx) / intr.fx, (corrs[i].image.v - intr.cy) / intr.fy};
  }
  const Similarity3 sim3 = conditioning_3d(corrs);
  const Eigen::Matrix3d t2 = conditioning_2d(rays);

  Eigen::MatrixXd a(2 * n, 12);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector4d p;
    p << sim3.scale * (corrs[i].world - sim3.centroid), 1.0;
    const Eigen::Vector3d x = t2 * rays[i].homogeneous();
    const auto r0 = static_cast<Eigen::Index>(2 * i);
    a.block<1, 4>(r0, 0) = p.transpose();
    a.block<1, 4>(r0, 4).setZero();
    a.block<1, 4>(r0, 8) = -x.x() * p.transpose();
    a.block<1, 4>(r0 + 1, 0).setZero();
    a.block<1, 4>(r0 + 1, 4) = p.transpose();
    a.block<1, 4>(r0 + 1, 8) = -x.y() * p.transpose();
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (!(sv(10) > kRankTolerance * sv(0))) {
    throw Error(Errc::DegenerateConfiguration, "point configuration is degenerate (rank of the DLT system < 11)");
  }
  const Eigen::VectorXd h = svd.matrixV().col(11);
  Eigen::Matrix<double, 3, 4> m;
  m << h.segment<4>(0).transpose(), h.segment<4>(4).transpose(), h.segment<4>(8).transpose();
  m = t2.inverse() * m;

  Eigen::Matrix3d block = m.leftCols<3>();
  double det = block.determinant();
  if (!(std::abs(det) > 0.0)) throw Error(Errc::DegenerateConfiguration, "rotation block of the DLT solution is singular");
  if (det < 0.0) {
    m = -m;
    block = -block;
    det = -det;
  }
  // block = (lambda / s) R for the unknown projective scale lambda.
  const double block_scale = opts.scale == DltScale::Determinant
                                 ? std::cbrt(det)
                                 : 0.5 * (block.row(0).norm() + block.row(1).norm());
  const Eigen::JacobiSVD<Eigen::Matrix3d> polar(block / block_scale, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d rotation = polar.matrixU() * polar.matrixV().transpose();
  if (rotation.determinant() < 0.0) {
    Eigen::Matrix3d u = polar.matrixU();
    u.col(2) = -u.col(2);
    rotation = u * polar.matrixV().transpose();
  }
  const double lambda = block_scale * sim3.scale;
  const Eigen::Vector3d translation = m.col(3) / lambda - rotation * sim3.centroid;

  std::size_t in_front = 0;
  for (const auto& c : corrs) in_front += (rotation * c.world + translation).z() > 0.0 ? 1 : 0;
  if (2 * in_front <= n) {
    // The opposite sign would make det(block) negative, which no rotation can explain.
    throw Error(Errc::CheiralityFailure, "only " + std::to_string(in_front) + " of " + std::to_string(n) +
                                             " points lie in front of the camera");
  }

  PnPSolution out;
  out.pose = Pose(rotation, translation);
  out.points_used = n;
  out.reprojection_rms = reprojection_rms(out.pose, corrs, intr);
  return out;
}

PnPInterpolation pnp_interpolate_position(const Point3& prev_target, const std::vector<Correspondence>& fg,
                                          const std::vector<Correspondence>& bg, const CameraIntrinsics& intr,
                                          const PnPOptions& opts) {
  auto tagged = [&](const std::vector<Correspondence>& set, const char* name) {
    try {
      return solve_pnp(set, intr, opts);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(name) + ": " + e.what());
    }
  };
  PnPInterpolation out;
  out.ego = tagged(bg, "background");
  out.combined = tagged(fg, "foreground");
  out.position = out.combined.pose.apply(prev_target);
  return out;
}

LabeledCorrespondences read_correspondences(std::istream& in) {
  LabeledCorrespondences out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Correspondence c{{j.at("X").get<double>(), j.at("Y").get<double>(), j.at("Z").get<double>()},
                       {j.at("u").get<double>(), j.at("v").get<double>()}};
      if (!(c.world.z() > 0.0)) throw Error(Errc::NonPositiveDepth, "correspondence with Z <= 0");
      const std::string set = j.value("set", std::string("fg"));
      if (set == "fg") {
        out.fg.push_back(c);
      } else if (set == "bg") {
        out.bg.push_back(c);
      } else {
        throw Error(Errc::Parse, "unknown set '" + set + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::Parse, "correspondences line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "correspondences line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

LabeledCorrespondences load_correspondences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return read_correspondences(in);
}

void write_correspondences(std::ostream& out, const LabeledCorrespondences& corrs) {
  auto emit = [&](const std::vector<Correspondence>& set, const char* name) {
    for (const auto& c : set) {
      nlohmann::json j{{"X", c.world.x()}, {"Y", c.world.y()}, {"Z", c.world.z()},
                       {"u", c.image.u},   {"v", c.image.v},   {"set", name}};
      out << j.dump() << '\n';
    }
  };
  emit(corrs.fg, "fg");
  emit(corrs.bg, "bg");
}

}  // namespace vfollow
