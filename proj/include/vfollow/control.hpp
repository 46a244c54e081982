#pragma once

#include <numbers>

namespace vfollow {

struct ControllerConfig {
  double wheelbase = 0.25;                         // m
  double expected_distance = 1.5;                  // m, desired standoff
  double delta_max = std::numbers::pi / 6.0;       // rad
  double kp = 0.8;
  double ki = 0.2;
  double kd = 0.05;
  double stop_radius = 0.1;                        // m around the standoff point
  double speed_max = 1.0;                          // m/s
  double integral_clamp = 2.0;                     // |integral| bound, m*s

  void validate() const;
};

struct ControlCommand {
  double steering = 0.0;  // rad, positive turns toward +x (right)
  double speed = 0.0;     // m/s, never negative
};

/// Pure-pursuit steering toward a target `lateral` meters right of the axis
/// at `depth` meters, with the standoff distance as the lookahead offset.
double pure_pursuit_steer(double lateral, double depth, const ControllerConfig& cfg);

/// PID speed on depth error (current depth - expected distance). Holds the
/// integral and previous error between calls.
class PidSpeed {
 public:
  explicit PidSpeed(const ControllerConfig& cfg);

  double step(double depth_error, double dt);
  void reset();
  double integral() const { return integral_; }

 private:
  ControllerConfig cfg_;
  double integral_ = 0.0;
  double prev_error_ = 0.0;
  bool has_prev_ = false;
};

class FollowController {
 public:
  explicit FollowController(const ControllerConfig& cfg);

  ControlCommand command(double lateral, double depth, double dt);
  const ControllerConfig& config() const { return cfg_; }

 private:
  ControllerConfig cfg_;
  PidSpeed pid_;
};

}  // namespace vfollow
