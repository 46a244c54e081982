#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "vfollow/geometry.hpp"

namespace vfollow {

/// Axis-aligned box in continuous pixel coordinates, x1 < x2 and y1 < y2.
class BBox {
 public:
  BBox() = default;
  BBox(double x1, double y1, double x2, double y2);

  double x1() const { return x1_; }
  double y1() const { return y1_; }
  double x2() const { return x2_; }
  double y2() const { return y2_; }
  double width() const { return x2_ - x1_; }
  double height() const { return y2_ - y1_; }
  double area() const { return width() * height(); }
  Pixel center() const { return {0.5 * (x1_ + x2_), 0.5 * (y1_ + y2_)}; }

  /// Closed-boundary membership.
  bool contains(const Pixel& p) const { return p.u >= x1_ && p.u <= x2_ && p.v >= y1_ && p.v <= y2_; }
  BBox translated(double dx, double dy) const { return {x1_ + dx, y1_ + dy, x2_ + dx, y2_ + dy}; }

 private:
  double x1_ = 0.0;
  double y1_ = 0.0;
  double x2_ = 1.0;
  double y2_ = 1.0;
};

struct Detection {
  BBox bbox;
  int class_id = 0;
  double confidence = 1.0;
  double timestamp = 0.0;
};

double intersection_area(const BBox& a, const BBox& b);
double iou(const BBox& a, const BBox& b);

/// IoU minus the share of the enclosing box not covered by the union.
double giou(const BBox& a, const BBox& b);
inline double giou_loss(const BBox& a, const BBox& b) { return 1.0 - giou(a, b); }

/// JSON lines with keys t, x1, y1, x2, y2, class, conf.
std::vector<Detection> read_detections(std::istream& in);
std::vector<Detection> load_detections(const std::filesystem::path& path);

}  // namespace vfollow
