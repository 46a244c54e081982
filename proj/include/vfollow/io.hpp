#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "vfollow/features.hpp"
#include "vfollow/geometry.hpp"

namespace vfollow::io {

// Plain-text depth: "width height" then `height` rows of `width` reals.
// Non-positive values are invalid cells.
DepthMap read_depth_text(std::istream& in);
void write_depth_text(std::ostream& out, const DepthMap& dm);

// Little-endian single-channel PFM ("Pf", negative scale). Rows are stored
// bottom-to-top per the format; invalid cells are written as 0.
DepthMap read_depth_pfm(std::istream& in);
void write_depth_pfm(std::ostream& out, const DepthMap& dm);

/// Dispatches on extension: ".pfm" is PFM, anything else is the text format.
DepthMap load_depth(const std::filesystem::path& path);
void save_depth(const std::filesystem::path& path, const DepthMap& dm);

/// YAML mapping with keys fx, fy, cx, cy.
CameraIntrinsics load_intrinsics(const std::filesystem::path& path);
CameraIntrinsics parse_intrinsics(const std::string& yaml_text);

/// Binary P5 PGM with maxval < 256, normalized to [0, 1].
GrayImage read_pgm(std::istream& in);
void write_pgm(std::ostream& out, const GrayImage& img);
GrayImage load_pgm(const std::filesystem::path& path);

}  // namespace vfollow::io
