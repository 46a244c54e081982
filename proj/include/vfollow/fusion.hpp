#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>
#include <shared_mutex>

#include "vfollow/depth_target.hpp"

namespace vfollow {

using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Constant-velocity state [position; velocity] with its covariance.
struct TrackState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Matrix6d covariance = Matrix6d::Identity();
  double last_time = 0.0;
};

struct FusionConfig {
  double process_noise = 0.5;  // white-acceleration variance, (m/s^2)^2
  Eigen::Matrix3d meas_noise_network = Eigen::Matrix3d::Identity() * 1e-4;
  Eigen::Matrix3d meas_noise_pnp = Eigen::Matrix3d::Identity() * 1e-2;
  std::size_t buffer_capacity = 32;
  double init_position_var = 1.0;
  double init_velocity_var = 1.0;
  double pnp_period = 1.0 / 30.0;  // registration matches within half of this

  void validate() const;
  const Eigen::Matrix3d& meas_noise(EstimateSource s) const {
    return s == EstimateSource::Network ? meas_noise_network : meas_noise_pnp;
  }
};

/// Discrete white-acceleration process noise for a step of `dt` seconds.
Matrix6d process_noise(double dt, double q);
Matrix6d transition(double dt);

TrackState initial_state(const TargetEstimate& m, const FusionConfig& cfg);

/// Throws TimeReversal when t < s.last_time.
TrackState predict(const TrackState& s, double t, double q);

/// Predicts to m.timestamp, then applies a Joseph-form position update.
TrackState update(const TrackState& s, const TargetEstimate& m, const FusionConfig& cfg);

struct TimedPosition {
  double t = 0.0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

/// Bounded history with strictly increasing timestamps; the oldest entry is
/// evicted when full.
class TrajectoryBuffer {
 public:
  explicit TrajectoryBuffer(std::size_t capacity = 32);

  void push(double t, const Eigen::Vector3d& position);  // TimeReversal unless t > back().t
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t capacity() const { return capacity_; }
  const TimedPosition& back() const { return entries_.back(); }
  const std::deque<TimedPosition>& entries() const { return entries_; }
  std::deque<TimedPosition>& entries() { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<TimedPosition> entries_;
};

/// Per-axis cubic p(t) = sum_k coeffs(k, axis) * (t - t_ref)^k with t_ref the
/// newest buffer timestamp.
struct CubicTrajectory {
  double t_ref = 0.0;
  Eigen::Matrix<double, 4, 3> coeffs = Eigen::Matrix<double, 4, 3>::Zero();
  double residual_rms = 0.0;

  Eigen::Vector3d position(double t) const;
  Eigen::Vector3d velocity(double t) const;
};

CubicTrajectory fit_trajectory(const TrajectoryBuffer& buf);

struct Registration {
  TrajectoryBuffer buffer;
  Eigen::Vector3d error = Eigen::Vector3d::Zero();
  std::size_t matched = 0;  // index of the entry the measurement was aligned with
  std::optional<CubicTrajectory> trajectory;
};

/// Aligns a network estimate with the nearest buffered entry (within
/// `tolerance` seconds) and shifts that entry and all later ones by the offset.
Registration register_network_measurement(const TrajectoryBuffer& buf, const TargetEstimate& net, double tolerance);

/// Single-writer tracker over the filter and the registration buffer. Readers
/// may query concurrently; each read sees a fully applied update.
class DepthTracker {
 public:
  explicit DepthTracker(FusionConfig cfg = {});

  DepthTracker(const DepthTracker&) = delete;
  DepthTracker& operator=(const DepthTracker&) = delete;

  /// The first measurement initializes the state. Network measurements are
  /// also registered against the buffer; a missing match is not an error.
  void ingest(const TargetEstimate& m);

  TargetEstimate fused_estimate(double query_time) const;  // Uninitialized before the first ingest
  Eigen::Matrix3d position_covariance(double query_time) const;
  std::optional<TrackState> state() const;
  TrajectoryBuffer buffer() const;
  std::optional<CubicTrajectory> trajectory() const;
  std::optional<Eigen::Vector3d> last_registration_error() const;
  const FusionConfig& config() const { return cfg_; }

 private:
  FusionConfig cfg_;
  mutable std::shared_mutex mutex_;
  std::optional<TrackState> state_;
  TrajectoryBuffer buffer_;
  std::optional<CubicTrajectory> trajectory_;
  std::optional<Eigen::Vector3d> last_error_;
};

}  // namespace vfollow
