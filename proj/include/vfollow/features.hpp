#pragma once

#include <cstddef>
#include <vector>

#include "vfollow/detect_eval.hpp"
#include "vfollow/geometry.hpp"

namespace vfollow {

/// Row-major grayscale image with intensities in [0, 1].
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height, double fill = 0.0);
  GrayImage(std::size_t width, std::size_t height, std::vector<double> data);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  double at(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }
  double& at(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }
  const std::vector<double>& data() const { return data_; }

  /// Bilinear sample at continuous pixel coordinates (cell centers at +0.5),
  /// clamped to the border.
  double sample(double u, double v) const;

  /// 2x2 box-filter decimation; a pixel coordinate p maps to p / 2.
  GrayImage half() const;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> data_;
};

struct Corner {
  Pixel position;
  double quality = 0.0;
};

struct FlowMatch {
  Pixel prev;
  Pixel next;
  bool converged = false;
};

struct ShiTomasiParams {
  std::size_t max_corners = 200;
  double quality_level = 0.01;
  double min_distance = 10.0;
  std::size_t window = 5;
};

struct LucasKanadeParams {
  std::size_t window = 21;
  std::size_t max_iters = 30;
  double eps = 0.01;
  std::size_t levels = 3;
};

/// Minimum eigenvalue of the uniformly windowed structure tensor at every
/// pixel. Pixels closer than window/2 + 1 to the border are 0.
std::vector<double> min_eigen_response(const GrayImage& img, std::size_t window);

std::vector<Corner> shi_tomasi(const GrayImage& img, const ShiTomasiParams& params);
std::vector<FlowMatch> lk_track(const GrayImage& prev, const GrayImage& next, const std::vector<Corner>& corners,
                                const LucasKanadeParams& params);

struct ForegroundSplit {
  std::vector<FlowMatch> foreground;
  std::vector<FlowMatch> background;
};

/// Matches whose `prev` lies in the closed box are foreground.
ForegroundSplit split_foreground(const std::vector<FlowMatch>& matches, const BBox& box);

namespace serial {
std::vector<double> min_eigen_response(const GrayImage& img, std::size_t window);
std::vector<FlowMatch> lk_track(const GrayImage& prev, const GrayImage& next, const std::vector<Corner>& corners,
                                const LucasKanadeParams& params);
}  // namespace serial

}  // namespace vfollow
