#pragma once

#include "vfollow/geometry.hpp"

namespace vfollow {

struct DepthMetrics {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rms = 0.0;
  double log_rms = 0.0;
  double accuracy = 0.0;  // share of cells with max(gt/pred, pred/gt) < threshold
};

struct MetricOptions {
  double accuracy_threshold = 1.25;
  /// false: mean ((gt - pred) / gt)^2. true: mean (gt - pred)^2 / gt.
  bool conventional_sq_rel = false;
};

/// Errors over cells valid in both maps. Throws ShapeMismatch or NoValidPixels.
DepthMetrics depth_metrics(const DepthMap& gt, const DepthMap& pred, const MetricOptions& opts = {});

namespace serial {
DepthMetrics depth_metrics(const DepthMap& gt, const DepthMap& pred, const MetricOptions& opts = {});
}

}  // namespace vfollow
