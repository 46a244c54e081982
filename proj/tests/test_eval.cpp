#include <doctest.h>

#include <cmath>
#include <random>

#include "vfollow/eval.hpp"

using namespace vfollow;

namespace {

DepthMap constant(std::size_t w, std::size_t h, double v) {
  DepthMap dm(w, h);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) dm.set(r, c, v);
  return dm;
}

}  // namespace

TEST_CASE("hand case gt=2, pred=1") {
  const DepthMetrics m = depth_metrics(constant(3, 2, 2.0), constant(3, 2, 1.0));
  CHECK(m.abs_rel == 0.5);
  CHECK(m.sq_rel == 0.25);
  CHECK(m.rms == 1.0);
  CHECK(m.log_rms == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(m.accuracy == 0.0);
  const DepthMetrics conv = depth_metrics(constant(3, 2, 2.0), constant(3, 2, 1.0), {1.25, true});
  CHECK(conv.sq_rel == 0.5);
}

TEST_CASE("identical maps give zero errors and full accuracy") {
  const DepthMetrics m = depth_metrics(constant(4, 4, 3.3), constant(4, 4, 3.3));
  CHECK(m.abs_rel == 0.0);
  CHECK(m.sq_rel == 0.0);
  CHECK(m.rms == 0.0);
  CHECK(m.log_rms == 0.0);
  CHECK(m.accuracy == 1.0);
}

TEST_CASE("only cells valid in both maps count") {
  DepthMap gt = constant(2, 1, 2.0), pred = constant(2, 1, 2.0);
  gt.set(0, 1, 10.0);
  pred.invalidate(0, 1);
  const DepthMetrics m = depth_metrics(gt, pred);
  CHECK(m.rms == 0.0);
  DepthMap none = constant(2, 1, 1.0);
  none.invalidate(0, 0);
  none.invalidate(0, 1);
  try {
    depth_metrics(gt, none);
    FAIL("expected NoValidPixels");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoValidPixels);
  }
}

TEST_CASE("shape mismatch and bad thresholds are rejected") {
  CHECK_THROWS_AS(depth_metrics(constant(2, 2, 1.0), constant(2, 3, 1.0)), Error);
  CHECK_THROWS_AS(depth_metrics(constant(2, 2, 1.0), constant(2, 2, 1.0), {1.0, false}), Error);
}

TEST_CASE("parallel metrics agree with the serial reference") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-0.5, 20.0);
  DepthMap gt(211, 97), pred(211, 97);
  for (std::size_t r = 0; r < 97; ++r) {
    for (std::size_t c = 0; c < 211; ++c) {
      gt.set(r, c, d(rng));
      pred.set(r, c, d(rng));
    }
  }
  for (bool conventional : {false, true}) {
    const MetricOptions o{1.25, conventional};
    const DepthMetrics a = depth_metrics(gt, pred, o), b = serial::depth_metrics(gt, pred, o);
    CHECK(a.abs_rel == doctest::Approx(b.abs_rel).epsilon(1e-12));
    CHECK(a.sq_rel == doctest::Approx(b.sq_rel).epsilon(1e-12));
    CHECK(a.rms == doctest::Approx(b.rms).epsilon(1e-12));
    CHECK(a.log_rms == doctest::Approx(b.log_rms).epsilon(1e-12));
    CHECK(a.accuracy == b.accuracy);
  }
}
