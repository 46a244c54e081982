#include "vfollow/detect_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>

namespace vfollow {

BBox::BBox(double x1, double y1, double x2, double y2) : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
  if (!(x1 < x2) || !(y1 < y2) || !std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) ||
      !std::isfinite(y2)) {
    throw Error(Errc::InvalidArgument, "bounding box requires finite x1 < x2 and y1 < y2");
  }
}

double intersection_area(const BBox& a, const BBox& b) {
  const double w = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double h = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

double iou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  return inter / (a.area() + b.area() - inter);
}

double giou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  // Enclosing box: min of the low corners, max of the high corners.
  const double cw = std::max(a.x2(), b.x2()) - std::min(a.x1(), b.x1());
  const double ch = std::max(a.y2(), b.y2()) - std::min(a.y1(), b.y1());
  const double enclosing = cw * ch;
  // enclosing >= uni holds exactly; the clamp only removes round-off so that giou <= iou.
  return inter / uni - std::max(0.0, (enclosing - uni) / enclosing);
}

std::vector<Detection> read_detections(std::istream& in) {
  std::vector<Detection> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Detection d;
      d.bbox = BBox(j.at("x1").get<double>(), j.at("y1").get<double>(), j.at("x2").get<double>(),
                    j.at("y2").get<double>());
      d.timestamp = j.at("t").get<double>();
      d.class_id = j.value("class", 0);
      d.confidence = j.value("conf", 1.0);
      if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
        throw Error(Errc::InvalidArgument, "confidence outside [0, 1]");
      }
      out.push_back(d);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::Parse, "detections line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "detections line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Detection> load_detections(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return read_detections(in);
}

}  // namespace vfollow
