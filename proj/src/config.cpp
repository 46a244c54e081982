#include "vfollow/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace vfollow {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(Errc::InvalidConfig, msg); }

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
  if (!node.IsMap()) fail(where + " must be a map");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out) {
  if (const YAML::Node v = node[key]) out = v.as<T>();
}

template <std::size_t N>
void read_array(const YAML::Node& node, const char* key, std::array<double, N>& out) {
  const YAML::Node v = node[key];
  if (!v) return;
  if (!v.IsSequence() || v.size() != N) fail(std::string(key) + " must be a list of " + std::to_string(N) + " numbers");
  for (std::size_t i = 0; i < N; ++i) out[i] = v[i].as<double>();
}

// A scalar means a multiple of the identity; otherwise a 3x3 nested list.
void read_noise(const YAML::Node& node, const char* key, Eigen::Matrix3d& out) {
  const YAML::Node v = node[key];
  if (!v) return;
  if (v.IsScalar()) {
    out = Eigen::Matrix3d::Identity() * v.as<double>();
    return;
  }
  if (!v.IsSequence() || v.size() != 3) fail(std::string(key) + " must be a number or a 3x3 list");
  for (std::size_t r = 0; r < 3; ++r) {
    if (!v[r].IsSequence() || v[r].size() != 3) fail(std::string(key) + " must be a number or a 3x3 list");
    for (std::size_t c = 0; c < 3; ++c) out(static_cast<int>(r), static_cast<int>(c)) = v[r][c].as<double>();
  }
}

LeaderSegment parse_segment(const YAML::Node& node) {
  check_keys(node, {"kind", "duration", "speed", "yaw_rate", "x", "z"}, "leader segment");
  LeaderSegment s;
  const auto kind = node["kind"] ? node["kind"].as<std::string>() : std::string("line");
  if (kind == "line") {
    s.kind = LeaderSegment::Kind::Line;
  } else if (kind == "arc") {
    s.kind = LeaderSegment::Kind::Arc;
  } else if (kind == "cubic") {
    s.kind = LeaderSegment::Kind::Cubic;
  } else {
    fail("leader segment kind must be line, arc or cubic, got '" + kind + "'");
  }
  read(node, "duration", s.duration);
  read(node, "speed", s.speed);
  read(node, "yaw_rate", s.yaw_rate);
  read_array(node, "x", s.x);
  read_array(node, "z", s.z);
  return s;
}

void parse_scenario(const YAML::Node& root, ScenarioConfig& c) {
  read(root, "duration", c.duration);
  read(root, "frame_rate", c.frame_rate);
  read(root, "network_depth_period", c.network_depth_period);
  read(root, "pnp_period", c.pnp_period);
  if (const YAML::Node v = root["leader_start"]) {
    std::array<double, 3> p{};
    read_array(root, "leader_start", p);
    c.leader_start = {p[0], p[1], p[2]};
  }
  read(root, "leader_heading", c.leader_heading);
  if (const YAML::Node segs = root["leader"]) {
    if (!segs.IsSequence()) fail("leader must be a list of segments");
    c.leader.clear();
    for (const auto& s : segs) c.leader.push_back(parse_segment(s));
  }
  read(root, "background_depth", c.background_depth);
  read(root, "target_width", c.target_width);
  read(root, "target_height", c.target_height);
  read(root, "target_length", c.target_length);
  read(root, "depth_noise_sigma", c.depth_noise_sigma);
  read(root, "pixel_noise_sigma", c.pixel_noise_sigma);
  read(root, "detection_jitter", c.detection_jitter);
  if (const YAML::Node k = root["intrinsics"]) {
    check_keys(k, {"fx", "fy", "cx", "cy"}, "intrinsics");
    read(k, "fx", c.intrinsics.fx);
    read(k, "fy", c.intrinsics.fy);
    read(k, "cx", c.intrinsics.cx);
    read(k, "cy", c.intrinsics.cy);
  }
  read(root, "image_width", c.image_width);
  read(root, "image_height", c.image_height);
  read(root, "seed", c.seed);
  if (const YAML::Node v = root["pnp_scale"]) {
    const auto name = v.as<std::string>();
    if (name == "determinant") {
      c.pnp_scale = DltScale::Determinant;
    } else if (name == "image_rows") {
      c.pnp_scale = DltScale::ImageRows;
    } else {
      fail("pnp_scale must be determinant or image_rows, got '" + name + "'");
    }
  }
  read(root, "fg_landmarks", c.fg_landmarks);
  read(root, "bg_landmarks", c.bg_landmarks);
  read(root, "follower_x", c.follower_x);
  read(root, "follower_z", c.follower_z);
  read(root, "follower_heading", c.follower_heading);
}

void parse_fusion(const YAML::Node& node, FusionConfig& f) {
  check_keys(node,
             {"process_noise", "meas_noise_network", "meas_noise_pnp", "buffer_capacity", "init_position_var",
              "init_velocity_var", "pnp_period"},
             "fusion");
  read(node, "process_noise", f.process_noise);
  read_noise(node, "meas_noise_network", f.meas_noise_network);
  read_noise(node, "meas_noise_pnp", f.meas_noise_pnp);
  read(node, "buffer_capacity", f.buffer_capacity);
  read(node, "init_position_var", f.init_position_var);
  read(node, "init_velocity_var", f.init_velocity_var);
  read(node, "pnp_period", f.pnp_period);
}

void parse_controller(const YAML::Node& node, ControllerConfig& c) {
  check_keys(node,
             {"wheelbase", "expected_distance", "delta_max", "kp", "ki", "kd", "stop_radius", "speed_max",
              "integral_clamp"},
             "controller");
  read(node, "wheelbase", c.wheelbase);
  read(node, "expected_distance", c.expected_distance);
  read(node, "delta_max", c.delta_max);
  read(node, "kp", c.kp);
  read(node, "ki", c.ki);
  read(node, "kd", c.kd);
  read(node, "stop_radius", c.stop_radius);
  read(node, "speed_max", c.speed_max);
  read(node, "integral_clamp", c.integral_clamp);
}

}  // namespace

RunConfig parse_run_config(const std::string& yaml_text) {
  RunConfig cfg;
  try {
    const YAML::Node root = YAML::Load(yaml_text);
    if (root.IsNull()) return cfg;
    check_keys(root,
               {"duration", "frame_rate", "network_depth_period", "pnp_period", "leader_start", "leader_heading",
                "leader", "background_depth", "target_width", "target_height", "target_length", "depth_noise_sigma",
                "pixel_noise_sigma", "detection_jitter", "intrinsics", "image_width", "image_height", "seed",
                "pnp_scale", "fg_landmarks", "bg_landmarks", "follower_x", "follower_z", "follower_heading", "fusion",
                "controller"},
               "config");
    parse_scenario(root, cfg.scenario);
    if (const YAML::Node f = root["fusion"]) parse_fusion(f, cfg.fusion);
    if (const YAML::Node c = root["controller"]) parse_controller(c, cfg.controller);
  } catch (const YAML::Exception& e) {
    throw Error(Errc::InvalidConfig, std::string("config: ") + e.what());
  }
  cfg.scenario.validate();
  cfg.fusion.validate();
  cfg.controller.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

}  // namespace vfollow
