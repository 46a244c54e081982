#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "vfollow/depth_target.hpp"

using namespace vfollow;

namespace {

DepthMap filled(std::size_t w, std::size_t h, double d) {
  DepthMap dm(w, h);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) dm.set(r, c, d);
  return dm;
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("constant box gives that depth") {
  const PeakDepth p = histogram_peak_depth(filled(20, 20, 4.0), BBox(0, 0, 20, 20));
  CHECK(p.depth == doctest::Approx(4.0));
  CHECK(p.hist.counts[0] == 400);
}

TEST_CASE("bimodal box picks the larger mode") {
  DepthMap dm = filled(20, 20, 10.0);
  // 70 percent of the cells at 2 m, the rest at 10 m.
  for (std::size_t i = 0; i < 280; ++i) dm.set(i / 20, i % 20, 2.0);
  const PeakDepth p = histogram_peak_depth(dm, BBox(0, 0, 20, 20));
  CHECK(p.depth == doctest::Approx(2.0));

  PeakDepthParams sigma;
  sigma.average = PeakAverage::SigmaForeground;
  CHECK(histogram_peak_depth(dm, BBox(0, 0, 20, 20), sigma).depth == doctest::Approx(2.0));
}

TEST_CASE("target depth is robust to background outliers") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> fg(3.0, 0.02);
  std::uniform_real_distribution<double> bg(5.0, 30.0);
  DepthMap dm(40, 40);
  for (std::size_t r = 0; r < 40; ++r)
    for (std::size_t c = 0; c < 40; ++c) dm.set(r, c, (r * 40 + c) % 10 < 6 ? fg(rng) : bg(rng));
  const PeakDepth p = histogram_peak_depth(dm, BBox(0, 0, 40, 40));
  CHECK(std::abs(p.depth - 3.0) < 0.05);
}

TEST_CASE("histogram conserves the in-box count") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> d(0.5, 8.0);
  DepthMap dm(30, 25);
  for (std::size_t r = 0; r < 25; ++r)
    for (std::size_t c = 0; c < 30; ++c) {
      if ((r + c) % 7 == 0) continue;  // leave some cells invalid
      dm.set(r, c, d(rng));
    }
  const BBox box(3.2, 4.9, 22.5, 20.0);
  const PeakDepth p = histogram_peak_depth(dm, box);
  std::size_t expected = 0;
  for (std::size_t r = 0; r < 25; ++r)
    for (std::size_t c = 0; c < 30; ++c) {
      const double u = c + 0.5, v = r + 0.5;
      if (dm.valid(r, c) && u >= box.x1() && u <= box.x2() && v >= box.y1() && v <= box.y2()) ++expected;
    }
  CHECK(std::accumulate(p.hist.counts.begin(), p.hist.counts.end(), std::size_t{0}) == expected);
  for (std::size_t i = 0; i < kDepthBins; ++i) CHECK(p.hist.edges[i] < p.hist.edges[i + 1]);
  CHECK(p.range_lo <= p.depth);
  CHECK(p.depth <= p.range_hi);
}

TEST_CASE("box outside the map") {
  CHECK(code_of([] { histogram_peak_depth(filled(10, 10, 1.0), BBox(20, 20, 30, 30)); }) == Errc::EmptyIntersection);
  CHECK(code_of([] { histogram_peak_depth(filled(10, 10, 1.0), BBox(-5, -5, 0.2, 0.2)); }) ==
        Errc::EmptyIntersection);
}

TEST_CASE("too few valid pixels") {
  CHECK(code_of([] { histogram_peak_depth(filled(7, 7, 1.0), BBox(0, 0, 7, 7)); }) == Errc::TooFewPixels);
  DepthMap sparse(20, 20);
  for (std::size_t c = 0; c < 20; ++c) sparse.set(0, c, 2.0);
  CHECK(code_of([&] { histogram_peak_depth(sparse, BBox(0, 0, 20, 20)); }) == Errc::TooFewPixels);
}

TEST_CASE("sigma_split labels cells") {
  DepthMap dm = filled(10, 10, 5.0);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 10; ++c) dm.set(r, c, r % 2 ? 2.1 : 1.9);
  dm.invalidate(9, 9);
  const ForegroundMask m = sigma_split(dm, BBox(0, 0, 10, 10), 2.0, 1.8, 2.2);
  CHECK(m.count(CellLabel::Foreground) == 50);
  CHECK(m.count(CellLabel::Background) == 49);
  CHECK(m.count(CellLabel::Outside) == 1);

  const ForegroundMask part = sigma_split(dm, BBox(0, 0, 5, 10), 2.0, 1.8, 2.2);
  CHECK(part.count(CellLabel::Outside) == 50);
  CHECK(part.labels[dm.index(0, 7)] == CellLabel::Outside);
  CHECK(part.labels[dm.index(0, 2)] == CellLabel::Foreground);

  CHECK(code_of([&] { sigma_split(dm, BBox(0, 0, 10, 10), 2.0, 3.0, 1.0); }) == Errc::InvalidArgument);
}

TEST_CASE("target position back-projects the box center") {
  const CameraIntrinsics intr{100.0, 100.0, 50.0, 50.0};
  const TargetEstimate centered = target_position(intr, BBox(40, 40, 60, 60), 2.0, 1.5);
  CHECK((centered.position - Point3(0, 0, 2)).norm() < 1e-12);
  CHECK(centered.timestamp == 1.5);
  CHECK(centered.source == EstimateSource::Network);

  const TargetEstimate offset = target_position(intr, BBox(140, 40, 160, 60), 2.0, 0.0);
  CHECK((offset.position - Point3(2, 0, 2)).norm() < 1e-12);
  CHECK(offset.depth() == 2.0);
}

TEST_CASE("estimate source names") {
  for (EstimateSource s : {EstimateSource::Network, EstimateSource::Pnp, EstimateSource::Fused})
    CHECK(source_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(source_from_string("lidar"), Error);
}
