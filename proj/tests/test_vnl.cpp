#include <doctest.h>

#include <cmath>
#include <random>

#include "vfollow/vnl.hpp"

using namespace vfollow;

namespace {

const CameraIntrinsics kIntr{60.0, 60.0, 32.0, 24.0};

DepthMap plane(double z) {
  DepthMap dm(64, 48);
  for (std::size_t r = 0; r < 48; ++r)
    for (std::size_t c = 0; c < 64; ++c) dm.set(r, c, z);
  return dm;
}

void check_code(Errc code, auto&& fn) {
  try {
    fn();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_CASE("constraint validation") {
  TripletConstraints c;
  CHECK_NOTHROW(c.validate());
  c.beta_min = 2.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.theta_min = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("triplet normals") {
  CHECK(triplet_normal(Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 1, 0)).n.isApprox(Eigen::Vector3d(0, 0, 1)));
  CHECK(triplet_normal(Point3(0, 0, 1), Point3(2, 0, 1), Point3(0, 3, 1)).n.isApprox(Eigen::Vector3d(0, 0, 1)));
  check_code(Errc::DegenerateTriplet, [] { triplet_normal(Point3(0, 0, 0), Point3(1, 0, 0), Point3(2, 0, 0)); });
  // Canonical sign: z >= 0, then y, then x.
  const auto n = triplet_normal(Point3(0, 0, 0), Point3(0, 1, 0), Point3(1, 0, 0)).n;
  CHECK(n.isApprox(Eigen::Vector3d(0, 0, 1)));
  const auto vertical = triplet_normal(Point3(0, 0, 0), Point3(0, 0, 1), Point3(1, 0, 0)).n;
  CHECK(vertical.isApprox(Eigen::Vector3d(0, 1, 0)));
}

TEST_CASE("vnl_loss examples") {
  const VirtualNormal x{Eigen::Vector3d::UnitX()}, y{Eigen::Vector3d::UnitY()};
  CHECK(vnl_loss({x, y}, {x, y}) == 0.0);
  CHECK(vnl_loss({x}, {VirtualNormal{-Eigen::Vector3d::UnitX()}}) == doctest::Approx(2.0));
  CHECK(vnl_loss({x}, {y}) == doctest::Approx(std::sqrt(2.0)));
  CHECK(vnl_loss({x, y}, {y, x}) == vnl_loss({y, x}, {x, y}));
  check_code(Errc::LengthMismatch, [&] { vnl_loss({x}, {x, y}); });
  check_code(Errc::LengthMismatch, [] { vnl_loss({}, {}); });
}

TEST_CASE("three valid points give that triplet") {
  const std::vector<Point3> cloud{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  const auto ts = sample_triplets(cloud, {}, 1, 0);
  REQUIRE(ts.size() == 1);
  const auto n = triplet_normal(ts[0]).n;
  CHECK(n.isApprox(Eigen::Vector3d(0, 0, 1)));
  for (const auto idx : ts[0].cells) CHECK(idx < 3);
  CHECK(ts[0].cells[0] != ts[0].cells[1]);
}

TEST_CASE("collinear cloud exhausts sampling") {
  std::vector<Point3> line;
  for (int i = 0; i < 50; ++i) line.emplace_back(0.1 * i, 0.0, 1.0);
  check_code(Errc::SamplingExhausted, [&] { sample_triplets(line, {}, 5, 1); });
}

TEST_CASE("sampling is deterministic and every triplet satisfies the constraints") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<Point3> cloud;
  for (int i = 0; i < 1000; ++i) cloud.emplace_back(u(rng), u(rng), 5.0 + u(rng));
  const TripletConstraints c;
  const auto a = sample_triplets(cloud, c, 100, 42);
  const auto b = sample_triplets(cloud, c, 100, 42);
  REQUIRE(a.size() == 100);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].cells == b[i].cells);
    CHECK(satisfies(c, a[i].a, a[i].b, a[i].c));
    CHECK(std::abs(triplet_normal(a[i]).n.norm() - 1.0) < 1e-9);
    CHECK(a[i].a == cloud[a[i].cells[0]]);
  }
  const auto other = sample_triplets(cloud, c, 100, 43);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].cells != other[i].cells;
  CHECK(differs);
}

TEST_CASE("vnl between depth maps: identical and parallel planes") {
  TripletConstraints c;
  c.theta_min = 0.1;
  CHECK(vnl_between_depth_maps(kIntr, plane(1.0), plane(1.0), c, 200, 0) == 0.0);
  CHECK(vnl_between_depth_maps(kIntr, plane(2.0), plane(1.0), c, 200, 0) == doctest::Approx(0.0).scale(1e-9));
  check_code(Errc::ShapeMismatch, [&] {
    vnl_between_depth_maps(kIntr, DepthMap(3, 3), plane(1.0), c, 10, 0);
  });
}

TEST_CASE("parallel vnl matches the serial reference") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.02);
  DepthMap gt = plane(2.0), pred = plane(2.0);
  for (std::size_t r = 0; r < 48; ++r)
    for (std::size_t c = 0; c < 64; ++c) pred.set(r, c, 2.0 + noise(rng));
  TripletConstraints c;
  c.theta_min = 0.3;
  const double a = vnl_between_depth_maps(kIntr, pred, gt, c, 300, 7);
  const double b = serial::vnl_between_depth_maps(kIntr, pred, gt, c, 300, 7);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
  CHECK(a > 0.0);
  CHECK(a <= 2.0);
}
