#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "vfollow/geometry.hpp"

namespace vfollow {

/// A 3D point in the previous camera frame and where it is seen now.
struct Correspondence {
  Point3 world;
  Pixel image;
};

struct PnPSolution {
  Pose pose;  // maps previous-frame coordinates into the current camera frame
  double reprojection_rms = 0.0;
  std::size_t points_used = 0;
};

inline constexpr std::size_t kMinPnPPoints = 6;

/// How the projective scale of the linear solution is fixed.
enum class DltScale {
  Determinant,  // cube root of the 3x3 block's determinant
  // Mean norm of the block's first two rows. These carry the image
  // magnification and stay well determined when the points span a narrow field
  // of view, where the third row (and so the determinant) is noisy.
  ImageRows,
};

struct PnPOptions {
  DltScale scale = DltScale::Determinant;
};

/// Linear (DLT) pose from >= 6 correspondences, no iterative refinement.
PnPSolution solve_pnp(const std::vector<Correspondence>& corrs, const CameraIntrinsics& intr,
                      const PnPOptions& opts = {});

struct PnPInterpolation {
  Point3 position;       // target in the current camera frame
  PnPSolution ego;       // from background points: camera motion
  PnPSolution combined;  // from foreground points: target motion seen by the camera
};

/// Carries the previous target position into the current frame. Errors from
/// either solve are rethrown with "foreground:" or "background:" prefixed.
PnPInterpolation pnp_interpolate_position(const Point3& prev_target, const std::vector<Correspondence>& fg,
                                          const std::vector<Correspondence>& bg, const CameraIntrinsics& intr,
                                          const PnPOptions& opts = {});

/// Correspondence files: JSON lines with keys X, Y, Z, u, v and an optional
/// set in {"fg", "bg"} (missing means "fg").
struct LabeledCorrespondences {
  std::vector<Correspondence> fg;
  std::vector<Correspondence> bg;
};

LabeledCorrespondences read_correspondences(std::istream& in);
LabeledCorrespondences load_correspondences(const std::filesystem::path& path);
void write_correspondences(std::ostream& out, const LabeledCorrespondences& corrs);

}  // namespace vfollow
