#include "vfollow/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace vfollow {

namespace {

void check_inputs(const DepthMap& gt, const DepthMap& pred, const MetricOptions& opts) {
  if (gt.width() != pred.width() || gt.height() != pred.height()) {
    throw Error(Errc::ShapeMismatch, "depth maps differ in shape");
  }
  if (!(opts.accuracy_threshold > 1.0)) throw Error(Errc::InvalidArgument, "accuracy threshold must exceed 1");
}

struct Sums {
  double abs_rel = 0.0, sq_rel = 0.0, sq = 0.0, log_sq = 0.0;
  std::size_t inliers = 0, n = 0;
};

DepthMetrics finish(const Sums& s) {
  if (s.n == 0) throw Error(Errc::NoValidPixels, "no cell is valid in both depth maps");
  const double n = static_cast<double>(s.n);
  return {s.abs_rel / n, s.sq_rel / n, std::sqrt(s.sq / n), std::sqrt(s.log_sq / n),
          static_cast<double>(s.inliers) / n};
}

}  // namespace

namespace serial {

DepthMetrics depth_metrics(const DepthMap& gt, const DepthMap& pred, const MetricOptions& opts) {
  check_inputs(gt, pred, opts);
  Sums s;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt.mask()[i] || !pred.mask()[i]) continue;
    const double g = gt.values()[i], p = pred.values()[i];
    const double diff = g - p;
    const double rel = std::abs(diff) / g;
    s.abs_rel += rel;
    s.sq_rel += opts.conventional_sq_rel ? diff * diff / g : rel * rel;
    s.sq += diff * diff;
    const double log_diff = std::log(g) - std::log(p);
    s.log_sq += log_diff * log_diff;
    if (std::max(g / p, p / g) < opts.accuracy_threshold) ++s.inliers;
    ++s.n;
  }
  return finish(s);
}

}  // namespace serial

DepthMetrics depth_metrics(const DepthMap& gt, const DepthMap& pred, const MetricOptions& opts) {
  check_inputs(gt, pred, opts);
  const double* gv = gt.values().data();
  const double* pv = pred.values().data();
  const std::uint8_t* gm = gt.mask().data();
  const std::uint8_t* pm = pred.mask().data();
  const auto total = static_cast<std::ptrdiff_t>(gt.size());
  const bool conventional = opts.conventional_sq_rel;
  const double threshold = opts.accuracy_threshold;

  double abs_rel = 0.0, sq_rel = 0.0, sq = 0.0, log_sq = 0.0;
  std::size_t inliers = 0, n = 0;
#pragma omp parallel for schedule(static) reduction(+ : abs_rel, sq_rel, sq, log_sq, inliers, n)
  for (std::ptrdiff_t i = 0; i < total; ++i) {
    if (!gm[i] || !pm[i]) continue;
    const double g = gv[i], p = pv[i];
    const double diff = g - p;
    const double rel = std::abs(diff) / g;
    abs_rel += rel;
    sq_rel += conventional ? diff * diff / g : rel * rel;
    sq += diff * diff;
    const double log_ratio = std::log(g / p);
    log_sq += log_ratio * log_ratio;
    inliers += (std::max(g / p, p / g) < threshold) ? 1 : 0;
    ++n;
  }
  return finish({abs_rel, sq_rel, sq, log_sq, inliers, n});
}

}  // namespace vfollow
