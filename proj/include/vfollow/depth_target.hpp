#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "vfollow/detect_eval.hpp"
#include "vfollow/geometry.hpp"

namespace vfollow {

inline constexpr std::size_t kDepthBins = 50;
inline constexpr std::size_t kMinBoxPixels = 50;

struct DepthHistogram {
  std::array<double, kDepthBins + 1> edges{};
  std::array<std::size_t, kDepthBins> counts{};
};

enum class EstimateSource { Network, Pnp, Fused };

std::string_view to_string(EstimateSource s);
EstimateSource source_from_string(std::string_view s);

struct TargetEstimate {
  Point3 position = Point3::Zero();  // camera frame
  double timestamp = 0.0;
  EstimateSource source = EstimateSource::Network;

  double depth() const { return position.z(); }
};

/// Which samples the final depth is averaged over.
enum class PeakAverage {
  ExpandedRange,   // every in-box depth whose bin is inside the expanded peak range
  SigmaForeground  // the 2-sigma foreground set around the peak
};

struct PeakDepthParams {
  double expand_ratio = 0.5;  // neighbours with count >= ratio * peak join the range
  PeakAverage average = PeakAverage::ExpandedRange;
  double sigma_multiplier = 2.0;
};

struct PeakDepth {
  double depth = 0.0;
  DepthHistogram hist;
  double range_lo = 0.0;
  double range_hi = 0.0;
};

/// Histogram-peak depth of the valid cells whose centers fall inside `box`.
PeakDepth histogram_peak_depth(const DepthMap& dm, const BBox& box, const PeakDepthParams& params = {});

enum class CellLabel : std::uint8_t { Outside = 0, Foreground = 1, Background = 2 };

struct ForegroundMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<CellLabel> labels;  // row-major

  std::size_t count(CellLabel l) const;
};

/// In-box valid cells within sigma_multiplier * sigma of `peak_depth` are
/// foreground, where sigma is the spread of the depths inside [lo, hi].
ForegroundMask sigma_split(const DepthMap& dm, const BBox& box, double peak_depth, double lo, double hi,
                           double sigma_multiplier = 2.0);

TargetEstimate target_position(const CameraIntrinsics& intr, const BBox& box, double depth, double timestamp);

}  // namespace vfollow
