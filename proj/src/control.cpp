#include "vfollow/control.hpp"

#include <algorithm>
#include <cmath>

#include "vfollow/error.hpp"

namespace vfollow {

namespace {
constexpr double kSingularLookahead = 1e-9;
}

void ControllerConfig::validate() const {
  if (!(wheelbase > 0.0)) throw Error(Errc::InvalidConfig, "wheelbase must be positive");
  if (!(expected_distance > 0.0)) throw Error(Errc::InvalidConfig, "expected_distance must be positive");
  if (!(delta_max > 0.0 && delta_max < std::numbers::pi / 2.0)) {
    throw Error(Errc::InvalidConfig, "delta_max must lie in (0, pi/2)");
  }
  if (!(kp >= 0.0 && ki >= 0.0 && kd >= 0.0)) throw Error(Errc::InvalidConfig, "PID gains must be >= 0");
  if (!(stop_radius > 0.0)) throw Error(Errc::InvalidConfig, "stop_radius must be positive");
  if (!(speed_max > 0.0)) throw Error(Errc::InvalidConfig, "speed_max must be positive");
  if (!(integral_clamp > 0.0)) throw Error(Errc::InvalidConfig, "integral_clamp must be positive");
}

double pure_pursuit_steer(double lateral, double depth, const ControllerConfig& cfg) {
  if (!(depth > 0.0)) throw Error(Errc::NonPositiveDepth, "steering needs a positive target depth");
  const double denom = depth * depth - cfg.expected_distance * cfg.expected_distance;
  if (std::abs(denom) < kSingularLookahead) {
    if (lateral == 0.0) return 0.0;
    return std::copysign(cfg.delta_max, lateral);
  }
  const double delta = std::atan(2.0 * lateral * cfg.wheelbase / denom);
  return std::clamp(delta, -cfg.delta_max, cfg.delta_max);
}

PidSpeed::PidSpeed(const ControllerConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

void PidSpeed::reset() {
  integral_ = 0.0;
  prev_error_ = 0.0;
  has_prev_ = false;
}

double PidSpeed::step(double depth_error, double dt) {
  if (!(dt > 0.0)) throw Error(Errc::NonPositiveDt, "PID step needs dt > 0");
  const double derivative = has_prev_ ? (depth_error - prev_error_) / dt : 0.0;
  prev_error_ = depth_error;
  has_prev_ = true;
  if (std::abs(depth_error) <= cfg_.stop_radius) return 0.0;  // integral is held inside the stop band

  integral_ = std::clamp(integral_ + depth_error * dt, -cfg_.integral_clamp, cfg_.integral_clamp);
  const double out = cfg_.kp * depth_error + cfg_.ki * integral_ + cfg_.kd * derivative;
  return std::clamp(out, 0.0, cfg_.speed_max);
}

FollowController::FollowController(const ControllerConfig& cfg) : cfg_(cfg), pid_(cfg) {}

ControlCommand FollowController::command(double lateral, double depth, double dt) {
  ControlCommand cmd;
  cmd.steering = pure_pursuit_steer(lateral, depth, cfg_);
  cmd.speed = pid_.step(depth - cfg_.expected_distance, dt);
  return cmd;
}

}  // namespace vfollow
