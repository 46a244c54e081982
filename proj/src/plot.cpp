#include "vfollow/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <vector>

namespace vfollow {

namespace {

struct Series {
  const char* name;
  const char* color;
  std::vector<std::pair<double, double>> points;
};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // Degenerate or empty ranges get a unit span so the mapping stays finite.
  void pad() {
    if (!(hi >= lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    const double span = hi - lo;
    const double margin = span > 0.0 ? 0.05 * span : 0.5;
    lo -= margin;
    hi += margin;
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void panel(std::ostream& out, const std::vector<Series>& series, const Range& tr, double top, const PlotOptions& opts,
           const std::string& ylabel) {
  const double left = 70.0, right = opts.width - 20.0;
  const double ptop = top + 30.0, pbottom = top + opts.panel_height - 40.0;
  Range yr;
  for (const auto& s : series) {
    for (const auto& p : s.points) yr.add(p.second);
  }
  yr.pad();
  auto x_of = [&](double t) { return left + (t - tr.lo) / (tr.hi - tr.lo) * (right - left); };
  auto y_of = [&](double v) { return pbottom - (v - yr.lo) / (yr.hi - yr.lo) * (pbottom - ptop); };

  out << "<rect x=\"" << num(left) << "\" y=\"" << num(ptop) << "\" width=\"" << num(right - left) << "\" height=\""
      << num(pbottom - ptop) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    const double t = tr.lo + (tr.hi - tr.lo) * i / 4.0;
    out << "<text x=\"" << num(left - 6) << "\" y=\"" << num(y_of(v) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
        << num(v) << "</text>\n";
    out << "<text x=\"" << num(x_of(t)) << "\" y=\"" << num(pbottom + 16) << "\" text-anchor=\"middle\" font-size=\"11\">"
        << num(t) << "</text>\n";
  }
  out << "<text x=\"16\" y=\"" << num(0.5 * (ptop + pbottom)) << "\" font-size=\"12\" transform=\"rotate(-90 16 "
      << num(0.5 * (ptop + pbottom)) << ")\" text-anchor=\"middle\">" << escape(ylabel) << "</text>\n";
  out << "<text x=\"" << num(0.5 * (left + right)) << "\" y=\"" << num(pbottom + 32)
      << "\" font-size=\"12\" text-anchor=\"middle\">t (s)</text>\n";

  double legend_x = left + 10;
  for (const auto& s : series) {
    if (s.points.empty()) continue;
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
    for (const auto& p : s.points) out << num(x_of(p.first)) << ',' << num(y_of(p.second)) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << num(legend_x) << "\" y=\"" << num(ptop - 8) << "\" font-size=\"12\" fill=\"" << s.color
        << "\">" << s.name << "</text>\n";
    legend_x += 90;
  }
}

}  // namespace

void write_depth_plot(std::ostream& out, const RunLog& log, const PlotOptions& opts) {
  std::vector<Series> depth{{"truth", "#000000", {}},
                            {"network", "#d62728", {}},
                            {"pnp", "#1f77b4", {}},
                            {"fused", "#2ca02c", {}}};
  std::vector<Series> error{{"network", "#d62728", {}}, {"pnp", "#1f77b4", {}}, {"fused", "#2ca02c", {}}};
  Range tr;
  double last_truth_t = -std::numeric_limits<double>::infinity();
  for (const auto& r : log.rows) {
    tr.add(r.t);
    if (r.t > last_truth_t) {
      depth[0].points.emplace_back(r.t, r.truth.z());
      last_truth_t = r.t;
    }
    if (r.failed()) continue;
    const std::size_t i = r.src == EstimateSource::Network ? 0 : r.src == EstimateSource::Pnp ? 1 : 2;
    depth[i + 1].points.emplace_back(r.t, r.estimate->z());
    error[i].points.emplace_back(r.t, r.estimate->z() - r.truth.z());
  }
  tr.pad();

  const int height = 2 * opts.panel_height + 40;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opts.width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << opts.width << ' ' << height << "\" font-family=\"sans-serif\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << opts.width / 2 << "\" y=\"22\" font-size=\"15\" text-anchor=\"middle\">" << escape(opts.title)
      << "</text>\n";
  panel(out, depth, tr, 20.0, opts, "depth (m)");
  panel(out, error, tr, 20.0 + opts.panel_height, opts, "depth error (m)");
  out << "</svg>\n";
}

}  // namespace vfollow
