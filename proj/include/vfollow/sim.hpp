#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vfollow/control.hpp"
#include "vfollow/detect_eval.hpp"
#include "vfollow/fusion.hpp"
#include "vfollow/geometry.hpp"
#include "vfollow/pnp.hpp"

namespace vfollow {

/// One piece of the leader's ground-plane path. Ground coordinates are
/// (x right, z forward) of the follower's initial camera; heading is measured
/// from +z toward +x.
struct LeaderSegment {
  enum class Kind { Line, Arc, Cubic };
  Kind kind = Kind::Line;
  double duration = 1.0;
  double speed = 0.0;     // line, arc
  double yaw_rate = 0.0;  // arc, rad/s
  // cubic: offset from the segment start, sum_{k=1..3} c[k-1] * tau^k
  std::array<double, 3> x{};
  std::array<double, 3> z{};
};

struct ScenarioConfig {
  double duration = 10.0;
  double frame_rate = 30.0;
  double network_depth_period = 0.3;
  double pnp_period = 0.033;

  Point3 leader_start{0.0, 0.0, 3.0};  // y is the rear-face center height in camera coordinates
  double leader_heading = 0.0;
  std::vector<LeaderSegment> leader;

  double background_depth = 8.0;
  double target_width = 0.6;
  double target_height = 0.4;
  double target_length = 0.5;  // landmark volume depth behind the rear face

  double depth_noise_sigma = 0.05;
  double pixel_noise_sigma = 0.5;
  double detection_jitter = 1.0;

  CameraIntrinsics intrinsics{300.0, 300.0, 160.0, 120.0};
  std::size_t image_width = 320;
  std::size_t image_height = 240;
  std::uint64_t seed = 0;

  DltScale pnp_scale = DltScale::ImageRows;  // the target spans a narrow field of view

  std::size_t fg_landmarks = 40;
  std::size_t bg_landmarks = 400;

  // Closed loop only: follower ground pose at t = 0.
  double follower_x = 0.0;
  double follower_z = 0.0;
  double follower_heading = 0.0;

  void validate() const;
  std::size_t frame_count() const;
  double frame_time(std::size_t k) const;
};

struct GroundPose {
  double x = 0.0;
  double z = 0.0;
  double heading = 0.0;
};

/// Leader ground pose at time t; the leader holds its final pose after the
/// last segment.
GroundPose leader_pose(const ScenarioConfig& cfg, double t);

/// Frames on which a source with `period` reports: frame 0 and every frame
/// whose time crosses the next multiple of the period.
std::vector<bool> tick_schedule(const ScenarioConfig& cfg, double period);

struct FrameRecord {
  std::size_t index = 0;
  double t = 0.0;
  Point3 truth = Point3::Zero();  // target rear-face center, camera frame
  std::optional<BBox> box;
  std::optional<DepthMap> depth;                  // network ticks
  std::optional<LabeledCorrespondences> corrs;    // PnP ticks
  double reference_t = 0.0;                       // frame the correspondence 3D points belong to
  bool network_tick = false;
  bool pnp_tick = false;
};

/// Open-loop scene: the camera stays at the ground origin.
std::vector<FrameRecord> generate_scenario(const ScenarioConfig& cfg);

enum class SourceMode { Both, NetworkOnly, PnpOnly };

struct RunRow {
  double t = 0.0;
  EstimateSource src = EstimateSource::Fused;
  Point3 truth = Point3::Zero();
  std::optional<Point3> estimate;  // empty when the source failed on this frame
  double steering = 0.0;
  double speed = 0.0;

  bool failed() const { return !estimate.has_value(); }
};

struct RunLog {
  std::vector<RunRow> rows;
};

struct FollowerSample {
  double t = 0.0;
  GroundPose follower;
  GroundPose leader;
  Point3 relative = Point3::Zero();  // true leader position in the camera frame
  ControlCommand command;
};

struct ClosedLoopResult {
  RunLog log;
  std::vector<FollowerSample> trajectory;
};

struct RunOptions {
  SourceMode mode = SourceMode::Both;
};

/// PnP ticks chain from the tracker's anchor; network ticks use the
/// histogram-peak depth at the detection box center. In PnpOnly mode the first
/// network estimate only seeds the PnP anchor.
RunLog run_open_loop(const ScenarioConfig& scenario, const std::vector<FrameRecord>& frames, const FusionConfig& fusion,
                     const RunOptions& opts = {});

ClosedLoopResult run_closed_loop(const ScenarioConfig& scenario, const FusionConfig& fusion,
                                 const ControllerConfig& controller, const RunOptions& opts = {});

struct RunSummary {
  double fused_rms = 0.0;    // depth error over fused rows
  double network_rms = 0.0;  // depth error over raw network rows
  double pnp_rms = 0.0;      // depth error over raw PnP rows
  double fused_jitter = 0.0;  // std of consecutive fused depth differences
  double raw_jitter = 0.0;    // same over raw rows in time order
  std::size_t failed_rows = 0;
};

RunSummary summarize(const RunLog& log);

// RunLog CSV: header "t,src,gt_x,gt_y,gt_z,est_x,est_y,est_z,src_failed,steering,speed",
// reals with 9 significant digits, failed estimates written as "nan".
void write_run_log(std::ostream& out, const RunLog& log);
RunLog read_run_log(std::istream& in);
void save_run_log(const std::filesystem::path& path, const RunLog& log);
RunLog load_run_log(const std::filesystem::path& path);

/// One JSON object per frame: t, truth, box, network/pnp flags, depth summary
/// and the correspondence lists.
void write_frame_dump(std::ostream& out, const std::vector<FrameRecord>& frames);
void write_follower_trajectory(std::ostream& out, const std::vector<FollowerSample>& samples);

/// Runs the recorded raw rows (network, pnp) through a fresh tracker and
/// returns them interleaved with a fused row per distinct timestamp.
RunLog fuse_offline(const RunLog& raw, const FusionConfig& fusion);

}  // namespace vfollow
