#include "vfollow/features.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace vfollow {

GrayImage::GrayImage(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), data_(width * height, fill) {
  if (width == 0 || height == 0) throw Error(Errc::InvalidArgument, "image dimensions must be positive");
  if (!(fill >= 0.0 && fill <= 1.0)) throw Error(Errc::InvalidArgument, "intensity outside [0, 1]");
}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width == 0 || height == 0) throw Error(Errc::InvalidArgument, "image dimensions must be positive");
  if (data_.size() != width * height) throw Error(Errc::ShapeMismatch, "image data size does not match dimensions");
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::InvalidArgument, "intensity outside [0, 1]");
  }
}

double GrayImage::sample(double u, double v) const {
  const double x = std::clamp(u - 0.5, 0.0, static_cast<double>(width_ - 1));
  const double y = std::clamp(v - 0.5, 0.0, static_cast<double>(height_ - 1));
  const auto x0 = static_cast<std::size_t>(x);
  const auto y0 = static_cast<std::size_t>(y);
  const std::size_t x1 = std::min(x0 + 1, width_ - 1);
  const std::size_t y1 = std::min(y0 + 1, height_ - 1);
  const double ax = x - static_cast<double>(x0);
  const double ay = y - static_cast<double>(y0);
  const double top = (1.0 - ax) * at(y0, x0) + ax * at(y0, x1);
  const double bottom = (1.0 - ax) * at(y1, x0) + ax * at(y1, x1);
  return (1.0 - ay) * top + ay * bottom;
}

GrayImage GrayImage::half() const {
  const std::size_t w = std::max<std::size_t>(1, width_ / 2);
  const std::size_t h = std::max<std::size_t>(1, height_ / 2);
  std::vector<double> out(w * h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t r0 = std::min(2 * r, height_ - 1), r1 = std::min(2 * r + 1, height_ - 1);
      const std::size_t c0 = std::min(2 * c, width_ - 1), c1 = std::min(2 * c + 1, width_ - 1);
      out[r * w + c] = 0.25 * (at(r0, c0) + at(r0, c1) + at(r1, c0) + at(r1, c1));
    }
  }
  return {w, h, std::move(out)};
}

namespace {

void check_window(std::size_t window) {
  if (window < 3 || window % 2 == 0) throw Error(Errc::InvalidArgument, "window must be an odd integer >= 3");
}

void check_image_size(const GrayImage& img, std::size_t window) {
  if (img.width() <= window + 2 || img.height() <= window + 2) {
    throw Error(Errc::ImageTooSmall, "image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                                         " is too small for window " + std::to_string(window));
  }
}

double min_eigen(double a, double b, double c) {
  const double half_trace = 0.5 * (a + c);
  const double half_diff = 0.5 * (a - c);
  return half_trace - std::sqrt(half_diff * half_diff + b * b);
}

struct Gradients {
  std::vector<double> gx;
  std::vector<double> gy;
};

// Central differences; the one-pixel border is left at zero.
Gradients central_gradients(const GrayImage& img) {
  const std::size_t w = img.width(), h = img.height();
  Gradients g{std::vector<double>(w * h, 0.0), std::vector<double>(w * h, 0.0)};
  const auto rows = static_cast<std::ptrdiff_t>(h);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ri = 1; ri < rows - 1; ++ri) {
    const auto r = static_cast<std::size_t>(ri);
    for (std::size_t c = 1; c + 1 < w; ++c) {
      g.gx[r * w + c] = 0.5 * (img.at(r, c + 1) - img.at(r, c - 1));
      g.gy[r * w + c] = 0.5 * (img.at(r + 1, c) - img.at(r - 1, c));
    }
  }
  return g;
}

}  // namespace

namespace serial {

std::vector<double> min_eigen_response(const GrayImage& img, std::size_t window) {
  check_window(window);
  check_image_size(img, window);
  const std::size_t w = img.width(), h = img.height();
  const std::size_t half = window / 2;
  const std::size_t margin = half + 1;
  std::vector<double> response(w * h, 0.0);
  auto ix = [&](std::size_t r, std::size_t c) { return 0.5 * (img.at(r, c + 1) - img.at(r, c - 1)); };
  auto iy = [&](std::size_t r, std::size_t c) { return 0.5 * (img.at(r + 1, c) - img.at(r - 1, c)); };
  for (std::size_t r = margin; r + margin < h; ++r) {
    for (std::size_t c = margin; c + margin < w; ++c) {
      double a = 0.0, b = 0.0, d = 0.0;
      for (std::size_t wr = r - half; wr <= r + half; ++wr) {
        for (std::size_t wc = c - half; wc <= c + half; ++wc) {
          const double gx = ix(wr, wc), gy = iy(wr, wc);
          a += gx * gx;
          b += gx * gy;
          d += gy * gy;
        }
      }
      response[r * w + c] = std::max(0.0, min_eigen(a, b, d));
    }
  }
  return response;
}

}  // namespace serial

std::vector<double> min_eigen_response(const GrayImage& img, std::size_t window) {
  check_window(window);
  check_image_size(img, window);
  const std::size_t w = img.width(), h = img.height();
  const std::size_t half = window / 2;
  const std::size_t margin = half + 1;
  const Gradients g = central_gradients(img);

  // Separable box sums: vertical pass into column sums, then horizontal.
  std::vector<double> va(w * h, 0.0), vb(w * h, 0.0), vd(w * h, 0.0);
  const auto r_begin = static_cast<std::ptrdiff_t>(margin);
  const auto r_end = static_cast<std::ptrdiff_t>(h - margin);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ri = r_begin; ri < r_end; ++ri) {
    const auto r = static_cast<std::size_t>(ri);
    for (std::size_t c = 1; c + 1 < w; ++c) {
      double a = 0.0, b = 0.0, d = 0.0;
      for (std::size_t wr = r - half; wr <= r + half; ++wr) {
        const double gx = g.gx[wr * w + c], gy = g.gy[wr * w + c];
        a += gx * gx;
        b += gx * gy;
        d += gy * gy;
      }
      va[r * w + c] = a;
      vb[r * w + c] = b;
      vd[r * w + c] = d;
    }
  }

  std::vector<double> response(w * h, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ri = r_begin; ri < r_end; ++ri) {
    const auto r = static_cast<std::size_t>(ri);
    for (std::size_t c = margin; c + margin < w; ++c) {
      double a = 0.0, b = 0.0, d = 0.0;
      for (std::size_t wc = c - half; wc <= c + half; ++wc) {
        a += va[r * w + wc];
        b += vb[r * w + wc];
        d += vd[r * w + wc];
      }
      response[r * w + c] = std::max(0.0, min_eigen(a, b, d));
    }
  }
  return response;
}

std::vector<Corner> shi_tomasi(const GrayImage& img, const ShiTomasiParams& params) {
  if (!(params.quality_level > 0.0 && params.quality_level <= 1.0)) {
    throw Error(Errc::InvalidArgument, "quality_level must lie in (0, 1]");
  }
  if (params.min_distance < 0.0) throw Error(Errc::InvalidArgument, "min_distance must be non-negative");
  const std::vector<double> response = min_eigen_response(img, params.window);
  const std::size_t w = img.width(), h = img.height();
  const double peak = *std::max_element(response.begin(), response.end());
  if (!(peak > 0.0) || params.max_corners == 0) return {};
  const double threshold = params.quality_level * peak;

  struct Candidate {
    double quality;
    std::size_t row, col;
  };
  std::vector<Candidate> candidates;
  for (std::size_t r = 1; r + 1 < h; ++r) {
    for (std::size_t c = 1; c + 1 < w; ++c) {
      const double q = response[r * w + c];
      if (q < threshold) continue;
      bool is_max = true;
      for (std::size_t nr = r - 1; nr <= r + 1 && is_max; ++nr) {
        for (std::size_t nc = c - 1; nc <= c + 1; ++nc) {
          if (response[nr * w + nc] > q) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) candidates.push_back({q, r, c});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.quality > b.quality; });

  std::vector<Corner> corners;
  const double min_d2 = params.min_distance * params.min_distance;
  for (const auto& cand : candidates) {
    const Pixel p = cell_center(cand.row, cand.col);
    const bool spaced = std::none_of(corners.begin(), corners.end(), [&](const Corner& k) {
      const double du = k.position.u - p.u, dv = k.position.v - p.v;
      return du * du + dv * dv < min_d2;
    });
    if (!spaced) continue;
    corners.push_back({p, cand.quality});
    if (corners.size() == params.max_corners) break;
  }
  return corners;
}

namespace {

constexpr double kSingularEigen = 1e-9;

struct PyramidLevel {
  GrayImage image;
  Gradients grad;
};

std::vector<PyramidLevel> build_pyramid(const GrayImage& base, std::size_t levels, bool with_gradients) {
  std::vector<PyramidLevel> pyr;
  pyr.push_back({base, {}});
  for (std::size_t l = 1; l < levels; ++l) pyr.push_back({pyr.back().image.half(), {}});
  if (with_gradients) {
    for (auto& lvl : pyr) lvl.grad = central_gradients(lvl.image);
  }
  return pyr;
}

double sample_field(const std::vector<double>& field, std::size_t w, std::size_t h, double u, double v) {
  const double x = std::clamp(u - 0.5, 0.0, static_cast<double>(w - 1));
  const double y = std::clamp(v - 0.5, 0.0, static_cast<double>(h - 1));
  const auto x0 = static_cast<std::size_t>(x);
  const auto y0 = static_cast<std::size_t>(y);
  const std::size_t x1 = std::min(x0 + 1, w - 1);
  const std::size_t y1 = std::min(y0 + 1, h - 1);
  const double ax = x - static_cast<double>(x0), ay = y - static_cast<double>(y0);
  const double top = (1.0 - ax) * field[y0 * w + x0] + ax * field[y0 * w + x1];
  const double bottom = (1.0 - ax) * field[y1 * w + x0] + ax * field[y1 * w + x1];
  return (1.0 - ay) * top + ay * bottom;
}

FlowMatch track_one(const std::vector<PyramidLevel>& prev, const std::vector<PyramidLevel>& next,
                    const Corner& corner, const LucasKanadeParams& params) {
  const auto half = static_cast<int>(params.window / 2);
  Eigen::Vector2d guess = Eigen::Vector2d::Zero();
  bool converged = false;

  for (std::size_t li = prev.size(); li-- > 0;) {
    const GrayImage& pimg = prev[li].image;
    const GrayImage& nimg = next[li].image;
    const auto& grad = prev[li].grad;
    const double scale = std::ldexp(1.0, -static_cast<int>(li));
    const double pu = corner.position.u * scale, pv = corner.position.v * scale;

    const std::size_t n = params.window * params.window;
    std::vector<double> tmpl(n), gxs(n), gys(n);
    Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
    std::size_t k = 0;
    for (int dy = -half; dy <= half; ++dy) {
      for (int dx = -half; dx <= half; ++dx, ++k) {
        const double u = pu + dx, v = pv + dy;
        tmpl[k] = pimg.sample(u, v);
        gxs[k] = sample_field(grad.gx, pimg.width(), pimg.height(), u, v);
        gys[k] = sample_field(grad.gy, pimg.width(), pimg.height(), u, v);
        g(0, 0) += gxs[k] * gxs[k];
        g(0, 1) += gxs[k] * gys[k];
        g(1, 1) += gys[k] * gys[k];
      }
    }
    g(1, 0) = g(0, 1);

    Eigen::Vector2d step = Eigen::Vector2d::Zero();
    const bool singular = min_eigen(g(0, 0), g(0, 1), g(1, 1)) < kSingularEigen;
    bool level_converged = false;
    if (!singular) {
      const Eigen::Matrix2d g_inv = g.inverse();
      for (std::size_t it = 0; it < params.max_iters; ++it) {
        Eigen::Vector2d mismatch = Eigen::Vector2d::Zero();
        k = 0;
        for (int dy = -half; dy <= half; ++dy) {
          for (int dx = -half; dx <= half; ++dx, ++k) {
            const double diff =
                tmpl[k] - nimg.sample(pu + guess.x() + step.x() + dx, pv + guess.y() + step.y() + dy);
            mismatch.x() += diff * gxs[k];
            mismatch.y() += diff * gys[k];
          }
        }
        const Eigen::Vector2d eta = g_inv * mismatch;
        step += eta;
        if (eta.norm() < params.eps) {
          level_converged = true;
          break;
        }
      }
    }
    if (li == 0) {
      guess += step;
      converged = !singular && level_converged;
    } else {
      guess = 2.0 * (guess + step);
    }
  }

  FlowMatch m;
  m.prev = corner.position;
  m.next = {corner.position.u + guess.x(), corner.position.v + guess.y()};
  const GrayImage& base = prev.front().image;
  const bool inside = m.next.u >= 0.0 && m.next.v >= 0.0 && m.next.u <= static_cast<double>(base.width()) &&
                      m.next.v <= static_cast<double>(base.height()) && std::isfinite(m.next.u) &&
                      std::isfinite(m.next.v);
  m.converged = converged && inside;
  return m;
}

std::size_t usable_levels(const GrayImage& img, const LucasKanadeParams& params) {
  std::size_t levels = std::max<std::size_t>(1, params.levels);
  std::size_t w = img.width(), h = img.height();
  std::size_t usable = 1;
  while (usable < levels) {
    w /= 2;
    h /= 2;
    if (w < params.window || h < params.window) break;
    ++usable;
  }
  return usable;
}

void check_lk_inputs(const GrayImage& prev, const GrayImage& next, const LucasKanadeParams& params) {
  if (prev.width() != next.width() || prev.height() != next.height()) {
    throw Error(Errc::ShapeMismatch, "lk_track needs images of the same shape");
  }
  check_window(params.window);
  if (params.max_iters == 0) throw Error(Errc::InvalidArgument, "max_iters must be positive");
  if (!(params.eps > 0.0)) throw Error(Errc::InvalidArgument, "eps must be positive");
}

}  // namespace

namespace serial {

std::vector<FlowMatch> lk_track(const GrayImage& prev, const GrayImage& next, const std::vector<Corner>& corners,
                                const LucasKanadeParams& params) {
  check_lk_inputs(prev, next, params);
  const std::size_t levels = usable_levels(prev, params);
  const auto prev_pyr = build_pyramid(prev, levels, true);
  const auto next_pyr = build_pyramid(next, levels, false);
  std::vector<FlowMatch> out;
  out.reserve(corners.size());
  for (const auto& c : corners) out.push_back(track_one(prev_pyr, next_pyr, c, params));
  return out;
}

}  // namespace serial

std::vector<FlowMatch> lk_track(const GrayImage& prev, const GrayImage& next, const std::vector<Corner>& corners,
                                const LucasKanadeParams& params) {
  check_lk_inputs(prev, next, params);
  const std::size_t levels = usable_levels(prev, params);
  const auto prev_pyr = build_pyramid(prev, levels, true);
  const auto next_pyr = build_pyramid(next, levels, false);
  std::vector<FlowMatch> out(corners.size());
  const auto n = static_cast<std::ptrdiff_t>(corners.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = track_one(prev_pyr, next_pyr, corners[i], params);
  return out;
}

ForegroundSplit split_foreground(const std::vector<FlowMatch>& matches, const BBox& box) {
  ForegroundSplit out;
  for (const auto& m : matches) (box.contains(m.prev) ? out.foreground : out.background).push_back(m);
  return out;
}

}  // namespace vfollow
