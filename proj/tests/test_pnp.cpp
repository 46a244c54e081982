#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "vfollow/pnp.hpp"

using namespace vfollow;

namespace {

const CameraIntrinsics kIntr{500.0, 500.0, 320.0, 240.0};

Eigen::Matrix3d random_rotation(std::mt19937_64& rng, double max_angle) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(-max_angle, max_angle);
  const Eigen::Vector3d axis = Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized();
  return Eigen::AngleAxisd(u(rng), axis).toRotationMatrix();
}

// Points in front of both cameras, in a box around `center`.
std::vector<Correspondence> synth(std::mt19937_64& rng, const Pose& pose, std::size_t n, const Point3& center,
                                  double half, double pixel_noise = 0.0) {
  std::uniform_real_distribution<double> u(-half, half);
  std::normal_distribution<double> noise(0.0, pixel_noise > 0.0 ? pixel_noise : 1.0);
  std::vector<Correspondence> out;
  while (out.size() < n) {
    const Point3 p = center + Point3(u(rng), u(rng), u(rng));
    const Point3 q = pose.apply(p);
    if (p.z() <= 0.1 || q.z() <= 0.1) continue;
    Pixel px = project(kIntr, q);
    if (pixel_noise > 0.0) {
      px.u += noise(rng);
      px.v += noise(rng);
    }
    out.push_back({p, px});
  }
  return out;
}

double rotation_error(const Pose& a, const Pose& b) { return Pose::angular_distance(a, b); }

}  // namespace

TEST_CASE("identity pose is recovered from noiseless points") {
  std::mt19937_64 rng(1);
  const auto corrs = synth(rng, Pose::identity(), 20, Point3(0, 0, 5), 2.0);
  const PnPSolution s = solve_pnp(corrs, kIntr);
  CHECK(rotation_error(s.pose, Pose::identity()) < 1e-6);
  CHECK(s.pose.translation().norm() < 1e-6);
  CHECK(s.reprojection_rms < 1e-6);
  CHECK(s.points_used == 20);
}

TEST_CASE("random poses are recovered with both scale options") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> t(-0.5, 0.5);
  for (int trial = 0; trial < 50; ++trial) {
    const Pose truth(random_rotation(rng, 0.5), Eigen::Vector3d(t(rng), t(rng), t(rng)));
    const auto corrs = synth(rng, truth, 12, Point3(0, 0, 6), 2.5);
    for (DltScale scale : {DltScale::Determinant, DltScale::ImageRows}) {
      const PnPSolution s = solve_pnp(corrs, kIntr, PnPOptions{scale});
      CHECK(rotation_error(s.pose, truth) < 1e-6);
      CHECK((s.pose.translation() - truth.translation()).norm() < 1e-6);
    }
  }
}

TEST_CASE("five points are not enough") {
  std::mt19937_64 rng(3);
  const auto corrs = synth(rng, Pose::identity(), 5, Point3(0, 0, 5), 2.0);
  try {
    solve_pnp(corrs, kIntr);
    FAIL("expected InsufficientPoints");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InsufficientPoints);
    CHECK(std::string(e.what()) == "insufficient points (5 < 6)");
    CHECK(kind_of(e.code()) == ErrorKind::Numerical);
  }
}

TEST_CASE("collinear points are degenerate") {
  std::vector<Correspondence> corrs;
  for (int i = 0; i < 10; ++i) {
    const Point3 p(0.1 * i, 0.05 * i, 4.0 + 0.2 * i);
    corrs.push_back({p, project(kIntr, p)});
  }
  try {
    solve_pnp(corrs, kIntr);
    FAIL("expected DegenerateConfiguration");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateConfiguration);
  }
}

TEST_CASE("coplanar points are degenerate for the linear solver") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Correspondence> corrs;
  for (int i = 0; i < 12; ++i) {
    const Point3 p(u(rng), u(rng), 5.0);
    corrs.push_back({p, project(kIntr, p)});
  }
  CHECK_THROWS_AS(solve_pnp(corrs, kIntr), Error);
}

TEST_CASE("scaling the scene scales the translation") {
  std::mt19937_64 rng(5);
  const Pose truth(random_rotation(rng, 0.3), Eigen::Vector3d(0.2, -0.1, 0.3));
  auto corrs = synth(rng, truth, 15, Point3(0, 0, 6), 2.0);
  const PnPSolution a = solve_pnp(corrs, kIntr);
  for (auto& c : corrs) c.world *= 3.0;
  const PnPSolution b = solve_pnp(corrs, kIntr);
  CHECK(rotation_error(a.pose, b.pose) < 1e-6);
  CHECK((b.pose.translation() - 3.0 * a.pose.translation()).norm() < 1e-6);
}

TEST_CASE("error grows with pixel noise") {
  const Pose truth(Eigen::AngleAxisd(0.1, Eigen::Vector3d::UnitY()).toRotationMatrix(), Eigen::Vector3d(0.1, 0, 0.2));
  auto mean_error = [&](double sigma) {
    std::mt19937_64 rng(6);
    double sum = 0.0;
    for (int i = 0; i < 40; ++i) {
      const auto corrs = synth(rng, truth, 30, Point3(0, 0, 6), 2.5, sigma);
      sum += (solve_pnp(corrs, kIntr).pose.translation() - truth.translation()).norm();
    }
    return sum / 40.0;
  };
  const double e0 = mean_error(0.1), e1 = mean_error(1.0), e2 = mean_error(3.0);
  CHECK(e0 < e1);
  CHECK(e1 < e2);
}

TEST_CASE("interpolation: static target and static camera") {
  std::mt19937_64 rng(7);
  const auto fg = synth(rng, Pose::identity(), 15, Point3(0, 0, 3), 0.5);
  const auto bg = synth(rng, Pose::identity(), 15, Point3(0, 0, 10), 4.0);
  const PnPInterpolation r = pnp_interpolate_position(Point3(0, 0, 3), fg, bg, kIntr);
  CHECK((r.position - Point3(0, 0, 3)).norm() < 1e-6);
}

TEST_CASE("interpolation: target approaches the camera") {
  std::mt19937_64 rng(8);
  const Pose target_motion(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0, 0, -0.1));
  const auto fg = synth(rng, target_motion, 15, Point3(0, 0, 3), 0.5);
  const auto bg = synth(rng, Pose::identity(), 15, Point3(0, 0, 10), 4.0);
  const PnPInterpolation r = pnp_interpolate_position(Point3(0, 0, 3), fg, bg, kIntr);
  CHECK((r.position - Point3(0, 0, 2.9)).norm() < 1e-6);
  CHECK(r.ego.pose.translation().norm() < 1e-6);
}

TEST_CASE("interpolation: camera moves forward") {
  std::mt19937_64 rng(9);
  // The camera advances 0.2 m, so everything appears 0.2 m closer.
  const Pose ego(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0, 0, -0.2));
  const auto fg = synth(rng, ego, 15, Point3(0.3, 0, 4), 0.5);
  const auto bg = synth(rng, ego, 15, Point3(0, 0, 10), 4.0);
  const PnPInterpolation r = pnp_interpolate_position(Point3(0.3, 0, 4), fg, bg, kIntr);
  CHECK((r.position - Point3(0.3, 0, 3.8)).norm() < 1e-6);
  CHECK((r.ego.pose.translation() - Eigen::Vector3d(0, 0, -0.2)).norm() < 1e-6);
}

TEST_CASE("interpolation errors name the failing set") {
  std::mt19937_64 rng(10);
  const auto good = synth(rng, Pose::identity(), 10, Point3(0, 0, 5), 1.0);
  const std::vector<Correspondence> few(good.begin(), good.begin() + 3);
  try {
    pnp_interpolate_position(Point3(0, 0, 5), few, good, kIntr);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InsufficientPoints);
    CHECK(std::string(e.what()).rfind("foreground:", 0) == 0);
  }
  try {
    pnp_interpolate_position(Point3(0, 0, 5), good, few, kIntr);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).rfind("background:", 0) == 0);
  }
}

TEST_CASE("correspondence files round-trip") {
  std::mt19937_64 rng(11);
  LabeledCorrespondences lc;
  lc.fg = synth(rng, Pose::identity(), 7, Point3(0, 0, 5), 1.0);
  lc.bg = synth(rng, Pose::identity(), 6, Point3(0, 0, 9), 2.0);
  std::stringstream ss;
  write_correspondences(ss, lc);
  const LabeledCorrespondences back = read_correspondences(ss);
  REQUIRE(back.fg.size() == 7);
  REQUIRE(back.bg.size() == 6);
  CHECK((back.fg[3].world - lc.fg[3].world).norm() < 1e-12);
  CHECK(back.bg[5].image.u == doctest::Approx(lc.bg[5].image.u));

  std::stringstream bad("{\"X\":1,\"Y\":2,\"Z\":3,\"u\":1,\"v\":2,\"set\":\"mid\"}\n");
  CHECK_THROWS_AS(read_correspondences(bad), Error);
  std::stringstream behind("{\"X\":1,\"Y\":2,\"Z\":-3,\"u\":1,\"v\":2}\n");
  CHECK_THROWS_AS(read_correspondences(behind), Error);
  std::stringstream plain("{\"X\":1,\"Y\":2,\"Z\":3,\"u\":1,\"v\":2}\n");
  CHECK(read_correspondences(plain).fg.size() == 1);
}
