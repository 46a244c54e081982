#include "vfollow/depth_target.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vfollow {

std::string_view to_string(EstimateSource s) {
  switch (s) {
    case EstimateSource::Network: return "network";
    case EstimateSource::Pnp: return "pnp";
    case EstimateSource::Fused: return "fused";
  }
  return "unknown";
}

EstimateSource source_from_string(std::string_view s) {
  if (s == "network") return EstimateSource::Network;
  if (s == "pnp") return EstimateSource::Pnp;
  if (s == "fused") return EstimateSource::Fused;
  throw Error(Errc::Parse, "unknown estimate source '" + std::string(s) + "'");
}

namespace {

struct CellRange {
  std::size_t r0, r1, c0, c1;  // half-open
};

// Cells whose centers (c + 0.5, r + 0.5) lie inside the closed box.
CellRange cells_in_box(const DepthMap& dm, const BBox& box) {
  auto first = [](double lo) { return std::max(0.0, std::ceil(lo - 0.5)); };
  auto last = [](double hi, std::size_t n) { return std::min(static_cast<double>(n), std::floor(hi - 0.5) + 1.0); };
  const double c0 = first(box.x1()), c1 = last(box.x2(), dm.width());
  const double r0 = first(box.y1()), r1 = last(box.y2(), dm.height());
  if (!(c0 < c1) || !(r0 < r1)) throw Error(Errc::EmptyIntersection, "detection box does not overlap the depth map");
  return {static_cast<std::size_t>(r0), static_cast<std::size_t>(r1), static_cast<std::size_t>(c0),
          static_cast<std::size_t>(c1)};
}

std::vector<double> box_depths(const DepthMap& dm, const CellRange& cr) {
  std::vector<double> out;
  for (std::size_t r = cr.r0; r < cr.r1; ++r) {
    for (std::size_t c = cr.c0; c < cr.c1; ++c) {
      if (dm.valid(r, c)) out.push_back(dm.depth(r, c));
    }
  }
  return out;
}

double spread(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(xs.size()));
}

}  // namespace

std::size_t ForegroundMask::count(CellLabel l) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
}

PeakDepth histogram_peak_depth(const DepthMap& dm, const BBox& box, const PeakDepthParams& params) {
  const CellRange cr = cells_in_box(dm, box);
  const std::vector<double> depths = box_depths(dm, cr);
  if (depths.size() < kMinBoxPixels) {
    throw Error(Errc::TooFewPixels, "only " + std::to_string(depths.size()) + " valid depths in the box (need " +
                                        std::to_string(kMinBoxPixels) + ")");
  }

  const auto [min_it, max_it] = std::minmax_element(depths.begin(), depths.end());
  const double lo = *min_it, hi = *max_it;
  // A constant box still gets strictly ascending edges; every sample lands in bin 0.
  const double width = hi > lo ? (hi - lo) / static_cast<double>(kDepthBins) : std::max(lo * 1e-9, 1e-12);

  PeakDepth out;
  for (std::size_t i = 0; i <= kDepthBins; ++i) out.hist.edges[i] = lo + width * static_cast<double>(i);
  out.hist.edges[kDepthBins] = std::max(out.hist.edges[kDepthBins], hi);
  auto bin_of = [&](double d) {
    const auto b = static_cast<std::size_t>(std::floor((d - lo) / width));
    return std::min(b, kDepthBins - 1);
  };
  for (double d : depths) ++out.hist.counts[bin_of(d)];

  // First maximum wins, i.e. ties go to the nearer bin.
  const std::size_t peak = static_cast<std::size_t>(
      std::max_element(out.hist.counts.begin(), out.hist.counts.end()) - out.hist.counts.begin());
  const double keep = params.expand_ratio * static_cast<double>(out.hist.counts[peak]);
  std::size_t first = peak, last = peak;
  while (first > 0 && static_cast<double>(out.hist.counts[first - 1]) >= keep) --first;
  while (last + 1 < kDepthBins && static_cast<double>(out.hist.counts[last + 1]) >= keep) ++last;
  out.range_lo = out.hist.edges[first];
  out.range_hi = out.hist.edges[last + 1];

  std::vector<double> in_range;
  for (double d : depths) {
    const std::size_t b = bin_of(d);
    if (b >= first && b <= last) in_range.push_back(d);
  }
  double sum = 0.0;
  for (double d : in_range) sum += d;
  out.depth = sum / static_cast<double>(in_range.size());

  if (params.average == PeakAverage::SigmaForeground) {
    const double sigma = std::max(spread(in_range), 1e-6);
    double fg_sum = 0.0;
    std::size_t fg_n = 0;
    for (double d : depths) {
      if (std::abs(d - out.depth) <= params.sigma_multiplier * sigma) {
        fg_sum += d;
        ++fg_n;
      }
    }
    if (fg_n > 0) out.depth = fg_sum / static_cast<double>(fg_n);
  }
  return out;
}

ForegroundMask sigma_split(const DepthMap& dm, const BBox& box, double peak_depth, double lo, double hi,
                           double sigma_multiplier) {
  if (!(lo <= hi) || !(peak_depth > 0.0)) throw Error(Errc::InvalidArgument, "sigma_split: invalid peak range");
  ForegroundMask mask{dm.width(), dm.height(), std::vector<CellLabel>(dm.size(), CellLabel::Outside)};
  const CellRange cr = cells_in_box(dm, box);
  std::vector<double> in_range;
  for (double d : box_depths(dm, cr)) {
    if (d >= lo && d <= hi) in_range.push_back(d);
  }
  const double sigma = std::max(spread(in_range), 1e-6);
  for (std::size_t r = cr.r0; r < cr.r1; ++r) {
    for (std::size_t c = cr.c0; c < cr.c1; ++c) {
      if (!dm.valid(r, c)) continue;
      const bool fg = std::abs(dm.depth(r, c) - peak_depth) <= sigma_multiplier * sigma;
      mask.labels[dm.index(r, c)] = fg ? CellLabel::Foreground : CellLabel::Background;
    }
  }
  return mask;
}

TargetEstimate target_position(const CameraIntrinsics& intr, const BBox& box, double depth, double timestamp) {
  TargetEstimate est;
  est.position = back_project(intr, box.center(), depth);
  est.timestamp = timestamp;
  est.source = EstimateSource::Network;
  return est;
}

}  // namespace vfollow
