#pragma once

#include <iosfwd>
#include <string>

#include "vfollow/sim.hpp"

namespace vfollow {

struct PlotOptions {
  int width = 900;         // px, whole document
  int panel_height = 320;  // px per panel
  std::string title = "Target depth";
};

/// Two stacked SVG line charts: depth against time for ground truth and each
/// source, and each source's depth error. Failed rows are skipped.
void write_depth_plot(std::ostream& out, const RunLog& log, const PlotOptions& opts = {});

}  // namespace vfollow
