#include "vfollow/fusion.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>

namespace vfollow {

namespace {

bool is_psd(const Eigen::Matrix3d& m) {
  if (!m.allFinite() || (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
  return es.eigenvalues().minCoeff() >= -1e-12;
}

}  // namespace

void FusionConfig::validate() const {
  if (!(process_noise >= 0.0)) throw Error(Errc::InvalidConfig, "process_noise must be >= 0");
  if (!is_psd(meas_noise_network) || !is_psd(meas_noise_pnp)) {
    throw Error(Errc::InvalidConfig, "measurement noise matrices must be symmetric PSD");
  }
  if (buffer_capacity < 4) throw Error(Errc::InvalidConfig, "buffer_capacity must be >= 4");
  if (!(init_position_var > 0.0) || !(init_velocity_var > 0.0)) {
    throw Error(Errc::InvalidConfig, "initial variances must be positive");
  }
  if (!(pnp_period > 0.0)) throw Error(Errc::InvalidConfig, "pnp_period must be positive");
}

Matrix6d transition(double dt) {
  Matrix6d f = Matrix6d::Identity();
  f.topRightCorner<3, 3>() = Eigen::Matrix3d::Identity() * dt;
  return f;
}

Matrix6d process_noise(double dt, double q) {
  const double dt2 = dt * dt;
  const Eigen::Matrix3d i3 = Eigen::Matrix3d::Identity();
  Matrix6d out;
  out.topLeftCorner<3, 3>() = i3 * (0.25 * dt2 * dt2 * q);
  out.topRightCorner<3, 3>() = i3 * (0.5 * dt2 * dt * q);
  out.bottomLeftCorner<3, 3>() = i3 * (0.5 * dt2 * dt * q);
  out.bottomRightCorner<3, 3>() = i3 * (dt2 * q);
  return out;
}

TrackState initial_state(const TargetEstimate& m, const FusionConfig& cfg) {
  TrackState s;
  s.position = m.position;
  s.velocity.setZero();
  s.covariance.setZero();
  s.covariance.topLeftCorner<3, 3>() = Eigen::Matrix3d::Identity() * cfg.init_position_var;
  s.covariance.bottomRightCorner<3, 3>() = Eigen::Matrix3d::Identity() * cfg.init_velocity_var;
  s.last_time = m.timestamp;
  return s;
}

TrackState predict(const TrackState& s, double t, double q) {
  if (t < s.last_time) {
    throw Error(Errc::TimeReversal, "predict to t=" + std::to_string(t) + " before last_time=" +
                                        std::to_string(s.last_time));
  }
  const double dt = t - s.last_time;
  const Matrix6d f = transition(dt);
  TrackState out = s;
  out.position = s.position + s.velocity * dt;
  out.covariance = f * s.covariance * f.transpose() + process_noise(dt, q);
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  out.last_time = t;
  return out;
}

TrackState update(const TrackState& s, const TargetEstimate& m, const FusionConfig& cfg) {
  TrackState prior = predict(s, m.timestamp, cfg.process_noise);
  Eigen::Matrix<double, 3, 6> h = Eigen::Matrix<double, 3, 6>::Zero();
  h.leftCols<3>().setIdentity();
  const Eigen::Matrix3d& r = cfg.meas_noise(m.source);

  const Eigen::Matrix3d innovation_cov = h * prior.covariance * h.transpose() + r;
  const Eigen::LDLT<Eigen::Matrix3d> ldlt(innovation_cov);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(ldlt.vectorD().minCoeff() > 1e-300) ||
      !innovation_cov.allFinite()) {
    throw Error(Errc::NumericalBreakdown, "innovation covariance is not invertible");
  }
  // K = P H^T S^-1, computed as (S^-1 H P)^T since S and P are symmetric.
  const Eigen::Matrix<double, 6, 3> gain = ldlt.solve(h * prior.covariance).transpose();
  const Eigen::Vector3d innovation = m.position - prior.position;
  Vector6d x;
  x << prior.position, prior.velocity;
  x += gain * innovation;

  const Matrix6d i_kh = Matrix6d::Identity() - gain * h;
  Matrix6d p = i_kh * prior.covariance * i_kh.transpose() + gain * r * gain.transpose();
  p = 0.5 * (p + p.transpose());

  TrackState out;
  out.position = x.head<3>();
  out.velocity = x.tail<3>();
  out.covariance = p;
  out.last_time = m.timestamp;
  return out;
}

TrajectoryBuffer::TrajectoryBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error(Errc::InvalidArgument, "trajectory buffer capacity must be positive");
}

void TrajectoryBuffer::push(double t, const Eigen::Vector3d& position) {
  if (!entries_.empty() && !(t > entries_.back().t)) {
    throw Error(Errc::TimeReversal, "trajectory buffer timestamps must increase strictly");
  }
  entries_.push_back({t, position});
  while (entries_.size() > capacity_) entries_.pop_front();
}

Eigen::Vector3d CubicTrajectory::position(double t) const {
  const double tau = t - t_ref;
  const Eigen::Vector4d basis(1.0, tau, tau * tau, tau * tau * tau);
  return coeffs.transpose() * basis;
}

Eigen::Vector3d CubicTrajectory::velocity(double t) const {
  const double tau = t - t_ref;
  const Eigen::Vector4d basis(0.0, 1.0, 2.0 * tau, 3.0 * tau * tau);
  return coeffs.transpose() * basis;
}

CubicTrajectory fit_trajectory(const TrajectoryBuffer& buf) {
  const auto& entries = buf.entries();
  // Timestamps are strictly increasing, so every entry is a distinct sample.
  if (entries.size() < 4) {
    throw Error(Errc::InsufficientSamples, "cubic fit needs >= 4 samples, have " + std::to_string(entries.size()));
  }
  const double t_ref = entries.back().t;
  const double span = t_ref - entries.front().t;
  if (!(span >= 1e-9)) throw Error(Errc::IllConditioned, "trajectory timestamps span less than 1e-9 s");

  // Fit in tau / span so the Vandermonde columns are O(1), then rescale.
  const auto n = static_cast<Eigen::Index>(entries.size());
  Eigen::MatrixXd v(n, 4);
  Eigen::MatrixXd y(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = (entries[static_cast<std::size_t>(i)].t - t_ref) / span;
    v.row(i) << 1.0, s, s * s, s * s * s;
    y.row(i) = entries[static_cast<std::size_t>(i)].position.transpose();
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v);
  const Eigen::MatrixXd scaled = qr.solve(y);

  CubicTrajectory out;
  out.t_ref = t_ref;
  double factor = 1.0;
  for (int k = 0; k < 4; ++k) {
    out.coeffs.row(k) = scaled.row(k) / factor;
    factor *= span;
  }
  const Eigen::MatrixXd residual = v * scaled - y;
  out.residual_rms = std::sqrt(residual.squaredNorm() / static_cast<double>(n));
  return out;
}

Registration register_network_measurement(const TrajectoryBuffer& buf, const TargetEstimate& net, double tolerance) {
  if (buf.empty()) throw Error(Errc::EmptyBuffer, "registration needs a non-empty trajectory buffer");
  const auto& entries = buf.entries();
  std::size_t best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const double gap = std::abs(entries[i].t - net.timestamp);
    if (gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  if (!(best_gap <= tolerance)) {
    throw Error(Errc::NoMatchingFrame, "no buffered frame within " + std::to_string(tolerance) + " s of t=" +
                                           std::to_string(net.timestamp));
  }

  Registration out{buf, net.position - entries[best].position, best, std::nullopt};
  auto& shifted = out.buffer.entries();
  for (std::size_t i = best; i < shifted.size(); ++i) shifted[i].position += out.error;
  if (out.buffer.size() >= 4) out.trajectory = fit_trajectory(out.buffer);
  return out;
}

DepthTracker::DepthTracker(FusionConfig cfg) : cfg_(std::move(cfg)), buffer_(cfg_.buffer_capacity) {
  cfg_.validate();
}

void DepthTracker::ingest(const TargetEstimate& m) {
  std::unique_lock lock(mutex_);
  // Compute everything first so a throw leaves the tracker untouched.
  TrackState next = state_ ? update(*state_, m, cfg_) : initial_state(m, cfg_);
  TrajectoryBuffer buffer = buffer_;
  std::optional<CubicTrajectory> trajectory = trajectory_;
  std::optional<Eigen::Vector3d> error = last_error_;

  if (m.source == EstimateSource::Network) {
    if (!buffer.empty()) {
      try {
        Registration reg = register_network_measurement(buffer, m, 0.5 * cfg_.pnp_period);
        buffer = std::move(reg.buffer);
        error = reg.error;
        if (reg.trajectory) trajectory = reg.trajectory;
      } catch (const Error& e) {
        if (e.code() != Errc::NoMatchingFrame) throw;
      }
    }
  } else if (m.source == EstimateSource::Pnp) {
    buffer.push(m.timestamp, m.position);
    if (buffer.size() >= 4) trajectory = fit_trajectory(buffer);
  }

  state_ = std::move(next);
  buffer_ = std::move(buffer);
  trajectory_ = std::move(trajectory);
  last_error_ = error;
}

TargetEstimate DepthTracker::fused_estimate(double query_time) const {
  std::shared_lock lock(mutex_);
  if (!state_) throw Error(Errc::Uninitialized, "tracker has no measurements yet");
  const TrackState s = predict(*state_, query_time, cfg_.process_noise);
  return {s.position, query_time, EstimateSource::Fused};
}

Eigen::Matrix3d DepthTracker::position_covariance(double query_time) const {
  std::shared_lock lock(mutex_);
  if (!state_) throw Error(Errc::Uninitialized, "tracker has no measurements yet");
  return predict(*state_, query_time, cfg_.process_noise).covariance.topLeftCorner<3, 3>();
}

std::optional<TrackState> DepthTracker::state() const {
  std::shared_lock lock(mutex_);
  return state_;
}

TrajectoryBuffer DepthTracker::buffer() const {
  std::shared_lock lock(mutex_);
  return buffer_;
}

std::optional<CubicTrajectory> DepthTracker::trajectory() const {
  std::shared_lock lock(mutex_);
  return trajectory_;
}

std::optional<Eigen::Vector3d> DepthTracker::last_registration_error() const {
  std::shared_lock lock(mutex_);
  return last_error_;
}

}  // namespace vfollow
