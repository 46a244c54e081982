#include "vfollow/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>
#include <random>
#include <sstream>

#include "vfollow/depth_target.hpp"
#include "vfollow/rng.hpp"

namespace vfollow {

namespace {

constexpr std::uint64_t kLandmarkStream = 1;
constexpr std::uint64_t kFrameStreamBase = 1000;
constexpr double kMinLandmarkDepth = 0.1;
// PnP periods a hair shorter than the frame period still tick every frame.
constexpr double kPeriodSlack = 0.98;

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

struct Landmarks {
  std::vector<Point3> body;   // leader frame: x right, y down, z forward from the rear face
  std::vector<Point3> world;  // static, ground frame (x, y, z)
};

Landmarks make_landmarks(const ScenarioConfig& cfg) {
  Rng rng = make_rng(cfg.seed, kLandmarkStream);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  std::uniform_real_distribution<double> along(0.0, 1.0);
  Landmarks lm;
  lm.body.reserve(cfg.fg_landmarks);
  for (std::size_t i = 0; i < cfg.fg_landmarks; ++i) {
    const double x = unit(rng) * cfg.target_width;
    const double y = unit(rng) * cfg.target_height;
    const double z = along(rng) * cfg.target_length;
    lm.body.emplace_back(x, y, z);
  }
  // Background points fill a wide slab around the background plane so both
  // the open-loop camera and a moving follower keep seeing them.
  const double far = cfg.background_depth;
  lm.world.reserve(cfg.bg_landmarks);
  for (std::size_t i = 0; i < cfg.bg_landmarks; ++i) {
    const double z = far * (0.6 + 0.8 * along(rng));
    const double x = unit(rng) * 2.0 * z;
    const double y = unit(rng) * 1.4 * z;
    lm.world.emplace_back(x, y, z);
  }
  return lm;
}

Point3 body_to_world(const GroundPose& leader, double height, const Point3& b) {
  const double c = std::cos(leader.heading), s = std::sin(leader.heading);
  return {leader.x + b.x() * c + b.z() * s, height + b.y(), leader.z - b.x() * s + b.z() * c};
}

Point3 world_to_camera(const GroundPose& cam, const Point3& w) {
  const double c = std::cos(cam.heading), s = std::sin(cam.heading);
  const double rx = w.x() - cam.x, rz = w.z() - cam.z;
  return {rx * c - rz * s, w.y(), rx * s + rz * c};
}

bool in_image(const ScenarioConfig& cfg, const Pixel& p) {
  return p.u >= 0.0 && p.v >= 0.0 && p.u <= static_cast<double>(cfg.image_width) &&
         p.v <= static_cast<double>(cfg.image_height);
}

// Projected rear-face rectangle, or nothing when it is behind the camera.
std::optional<BBox> true_box(const ScenarioConfig& cfg, const Point3& truth) {
  if (truth.z() <= kMinLandmarkDepth) return std::nullopt;
  const auto& k = cfg.intrinsics;
  const double u1 = k.fx * (truth.x() - 0.5 * cfg.target_width) / truth.z() + k.cx;
  const double u2 = k.fx * (truth.x() + 0.5 * cfg.target_width) / truth.z() + k.cx;
  const double v1 = k.fy * (truth.y() - 0.5 * cfg.target_height) / truth.z() + k.cy;
  const double v2 = k.fy * (truth.y() + 0.5 * cfg.target_height) / truth.z() + k.cy;
  return BBox(u1, v1, u2, v2);
}

std::optional<BBox> clip_box(const ScenarioConfig& cfg, double x1, double y1, double x2, double y2) {
  const double w = static_cast<double>(cfg.image_width), h = static_cast<double>(cfg.image_height);
  x1 = std::clamp(x1, 0.0, w);
  x2 = std::clamp(x2, 0.0, w);
  y1 = std::clamp(y1, 0.0, h);
  y2 = std::clamp(y2, 0.0, h);
  if (!(x2 > x1) || !(y2 > y1)) return std::nullopt;
  return BBox(x1, y1, x2, y2);
}

struct FrameGeometry {
  GroundPose camera;
  GroundPose leader;
};

class Renderer {
 public:
  explicit Renderer(const ScenarioConfig& cfg)
      : cfg_(cfg),
        landmarks_(make_landmarks(cfg)),
        network_ticks_(tick_schedule(cfg, cfg.network_depth_period)),
        pnp_ticks_(tick_schedule(cfg, std::max(cfg.pnp_period, 1.0 / cfg.frame_rate))) {}

  FrameRecord render(std::size_t k, const FrameGeometry& now) {
    FrameRecord f;
    f.index = k;
    f.t = cfg_.frame_time(k);
    f.network_tick = network_ticks_[k];
    f.pnp_tick = pnp_ticks_[k];
    f.truth = world_to_camera(now.camera, body_to_world(now.leader, cfg_.leader_start.y(), Point3::Zero()));

    Rng rng = make_rng(cfg_.seed, kFrameStreamBase + k);
    std::uniform_real_distribution<double> jitter(-cfg_.detection_jitter, cfg_.detection_jitter);
    std::normal_distribution<double> depth_noise(0.0, cfg_.depth_noise_sigma);
    std::normal_distribution<double> pixel_noise(0.0, cfg_.pixel_noise_sigma);
    auto draw = [&](auto& dist, double sigma) { return sigma > 0.0 ? dist(rng) : 0.0; };

    const std::optional<BBox> exact = true_box(cfg_, f.truth);
    if (exact) {
      const double j[4] = {draw(jitter, cfg_.detection_jitter), draw(jitter, cfg_.detection_jitter),
                           draw(jitter, cfg_.detection_jitter), draw(jitter, cfg_.detection_jitter)};
      f.box = clip_box(cfg_, exact->x1() + j[0], exact->y1() + j[1], exact->x2() + j[2], exact->y2() + j[3]);
    }

    if (f.network_tick) {
      DepthMap dm(cfg_.image_width, cfg_.image_height);
      const bool target_visible = exact && f.truth.z() < cfg_.background_depth;
      for (std::size_t r = 0; r < cfg_.image_height; ++r) {
        for (std::size_t c = 0; c < cfg_.image_width; ++c) {
          const bool on_target = target_visible && exact->contains(cell_center(r, c));
          const double d = (on_target ? f.truth.z() : cfg_.background_depth) +
                           draw(depth_noise, cfg_.depth_noise_sigma);
          dm.set(r, c, d);
        }
      }
      f.depth = std::move(dm);
    }

    if (f.pnp_tick && prev_) {
      LabeledCorrespondences corrs;
      for (const Point3& b : landmarks_.body) {
        const Point3 was = world_to_camera(prev_->camera, body_to_world(prev_->leader, cfg_.leader_start.y(), b));
        const Point3 is = world_to_camera(now.camera, body_to_world(now.leader, cfg_.leader_start.y(), b));
        add_correspondence(corrs.fg, was, is, rng, pixel_noise);
      }
      for (const Point3& w : landmarks_.world) {
        add_correspondence(corrs.bg, world_to_camera(prev_->camera, w), world_to_camera(now.camera, w), rng,
                           pixel_noise);
      }
      f.corrs = std::move(corrs);
      f.reference_t = prev_t_;
    }
    if (f.pnp_tick) {
      prev_ = now;
      prev_t_ = f.t;
    }
    return f;
  }

 private:
  void add_correspondence(std::vector<Correspondence>& out, const Point3& was, const Point3& is, Rng& rng,
                          std::normal_distribution<double>& noise) const {
    if (was.z() <= kMinLandmarkDepth || is.z() <= kMinLandmarkDepth) return;
    if (!in_image(cfg_, project(cfg_.intrinsics, was))) return;
    Pixel px = project(cfg_.intrinsics, is);
    if (!in_image(cfg_, px)) return;
    if (cfg_.pixel_noise_sigma > 0.0) {
      px.u += noise(rng);
      px.v += noise(rng);
    }
    out.push_back({was, px});
  }

  const ScenarioConfig& cfg_;
  Landmarks landmarks_;
  std::vector<bool> network_ticks_;
  std::vector<bool> pnp_ticks_;
  std::optional<FrameGeometry> prev_;
  double prev_t_ = 0.0;
};

// Per-frame estimation shared by the open and closed loops.
class Pipeline {
 public:
  Pipeline(const ScenarioConfig& scenario, const FusionConfig& fusion, SourceMode mode)
      : scenario_(scenario), tracker_(effective(scenario, fusion)), mode_(mode) {}

  // Appends this frame's rows and returns the fused position, if any.
  std::optional<Point3> process(const FrameRecord& f, std::vector<RunRow>& rows) {
    bool pnp_ok = false;
    std::optional<Point3> net_pos;

    if (f.pnp_tick && f.corrs && mode_ != SourceMode::NetworkOnly) {
      RunRow row{f.t, EstimateSource::Pnp, f.truth, std::nullopt, 0.0, 0.0};
      try {
        if (!anchor_ || std::abs(anchor_->t - f.reference_t) > 1e-9) {
          throw Error(Errc::Uninitialized, "no target position at the reference frame");
        }
        const Point3 pos =
            pnp_interpolate_position(anchor_->position, f.corrs->fg, f.corrs->bg, scenario_.intrinsics,
                                     {scenario_.pnp_scale})
                .position;
        tracker_.ingest({pos, f.t, EstimateSource::Pnp});
        row.estimate = pos;
        pnp_ok = true;
      } catch (const Error&) {
      }
      rows.push_back(row);
    }

    const bool use_network = mode_ != SourceMode::PnpOnly || !seeded_;
    if (f.network_tick && f.depth && use_network) {
      RunRow row{f.t, EstimateSource::Network, f.truth, std::nullopt, 0.0, 0.0};
      try {
        if (!f.box) throw Error(Errc::EmptyIntersection, "no detection box on this frame");
        const PeakDepth peak = histogram_peak_depth(*f.depth, *f.box);
        const TargetEstimate est = target_position(scenario_.intrinsics, *f.box, peak.depth, f.t);
        if (mode_ == SourceMode::PnpOnly) {
          seeded_ = true;
        } else {
          tracker_.ingest(est);
          row.estimate = est.position;
        }
        net_pos = est.position;
      } catch (const Error&) {
      }
      if (mode_ != SourceMode::PnpOnly) rows.push_back(row);
    }

    // The next PnP solve starts from this frame. After a same-frame network
    // registration the newest buffer entry already carries the correction.
    if (pnp_ok) {
      anchor_ = tracker_.buffer().back();
    } else if (net_pos) {
      anchor_ = TimedPosition{f.t, *net_pos};
    } else if (tracker_.state()) {
      anchor_ = TimedPosition{f.t, tracker_.fused_estimate(f.t).position};
    }

    RunRow fused{f.t, EstimateSource::Fused, f.truth, std::nullopt, 0.0, 0.0};
    if (tracker_.state()) fused.estimate = tracker_.fused_estimate(f.t).position;
    rows.push_back(fused);
    return fused.estimate;
  }

 private:
  static FusionConfig effective(const ScenarioConfig& scenario, FusionConfig fusion) {
    fusion.pnp_period = std::max(scenario.pnp_period, 1.0 / scenario.frame_rate);
    return fusion;
  }

  const ScenarioConfig& scenario_;
  DepthTracker tracker_;
  SourceMode mode_;
  std::optional<TimedPosition> anchor_;
  bool seeded_ = false;
};

double rms(const std::vector<double>& errs) {
  if (errs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double e : errs) s += e * e;
  return std::sqrt(s / static_cast<double>(errs.size()));
}

double diff_std(const std::vector<double>& series) {
  if (series.size() < 3) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> d;
  d.reserve(series.size() - 1);
  for (std::size_t i = 1; i < series.size(); ++i) d.push_back(series[i] - series[i - 1]);
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(d.size());
  double var = 0.0;
  for (double v : d) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(d.size()));
}

const char* kCsvHeader = "t,src,gt_x,gt_y,gt_z,est_x,est_y,est_z,src_failed,steering,speed";

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double parse_real(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw Error(Errc::Parse, "run log line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

nlohmann::json vec_json(const Point3& p) { return nlohmann::json::array({p.x(), p.y(), p.z()}); }

}  // namespace

void ScenarioConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(Errc::InvalidConfig, what); };
  if (!(std::isfinite(duration) && duration >= 0.0)) bad("duration must be >= 0");
  if (!(std::isfinite(frame_rate) && frame_rate > 0.0)) bad("frame_rate must be positive");
  const double frame = 1.0 / frame_rate;
  if (!(network_depth_period >= frame * kPeriodSlack)) bad("network_depth_period must be >= 1/frame_rate");
  if (!(pnp_period >= frame * kPeriodSlack)) bad("pnp_period must be >= 1/frame_rate");
  if (!leader_start.allFinite() || !std::isfinite(leader_heading)) bad("leader start must be finite");
  if (!(leader_start.z() > 0.0)) bad("leader must start in front of the camera");
  for (const auto& s : leader) {
    if (!(std::isfinite(s.duration) && s.duration > 0.0)) bad("leader segment duration must be positive");
    if (!std::isfinite(s.speed) || !std::isfinite(s.yaw_rate)) bad("leader segment values must be finite");
    for (int k = 0; k < 3; ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.z[k])) bad("cubic coefficients must be finite");
    }
  }
  if (!(background_depth > 0.0) || !std::isfinite(background_depth)) bad("background_depth must be positive");
  if (!(target_width > 0.0) || !(target_height > 0.0) || !(target_length >= 0.0)) bad("target size must be positive");
  if (!finite_nonneg(depth_noise_sigma) || !finite_nonneg(pixel_noise_sigma) || !finite_nonneg(detection_jitter)) {
    bad("noise levels must be >= 0");
  }
  if (!(intrinsics.fx > 0.0) || !(intrinsics.fy > 0.0) || !std::isfinite(intrinsics.cx) ||
      !std::isfinite(intrinsics.cy)) {
    bad("intrinsics need fx > 0 and fy > 0");
  }
  if (image_width == 0 || image_height == 0) bad("image size must be positive");
  if (!std::isfinite(follower_x) || !std::isfinite(follower_z) || !std::isfinite(follower_heading)) {
    bad("follower start must be finite");
  }
}

std::size_t ScenarioConfig::frame_count() const {
  return static_cast<std::size_t>(std::floor(duration * frame_rate + 1e-9)) + 1;
}

double ScenarioConfig::frame_time(std::size_t k) const { return static_cast<double>(k) / frame_rate; }

GroundPose leader_pose(const ScenarioConfig& cfg, double t) {
  GroundPose p{cfg.leader_start.x(), cfg.leader_start.z(), cfg.leader_heading};
  double start = 0.0;
  for (const auto& s : cfg.leader) {
    const double tau = std::clamp(t - start, 0.0, s.duration);
    GroundPose q = p;
    switch (s.kind) {
      case LeaderSegment::Kind::Line:
        q.x += s.speed * tau * std::sin(p.heading);
        q.z += s.speed * tau * std::cos(p.heading);
        break;
      case LeaderSegment::Kind::Arc:
        if (std::abs(s.yaw_rate) < 1e-12) {
          q.x += s.speed * tau * std::sin(p.heading);
          q.z += s.speed * tau * std::cos(p.heading);
        } else {
          const double r = s.speed / s.yaw_rate;
          const double h = p.heading + s.yaw_rate * tau;
          q.x += r * (std::cos(p.heading) - std::cos(h));
          q.z += r * (std::sin(h) - std::sin(p.heading));
          q.heading = h;
        }
        break;
      case LeaderSegment::Kind::Cubic: {
        q.x += s.x[0] * tau + s.x[1] * tau * tau + s.x[2] * tau * tau * tau;
        q.z += s.z[0] * tau + s.z[1] * tau * tau + s.z[2] * tau * tau * tau;
        const double dx = s.x[0] + 2.0 * s.x[1] * tau + 3.0 * s.x[2] * tau * tau;
        const double dz = s.z[0] + 2.0 * s.z[1] * tau + 3.0 * s.z[2] * tau * tau;
        if (std::hypot(dx, dz) > 1e-12) q.heading = std::atan2(dx, dz);
        break;
      }
    }
    p = q;
    if (t <= start + s.duration) break;
    start += s.duration;
  }
  return p;
}

std::vector<bool> tick_schedule(const ScenarioConfig& cfg, double period) {
  if (!(period > 0.0)) throw Error(Errc::InvalidArgument, "tick period must be positive");
  const std::size_t n = cfg.frame_count();
  std::vector<bool> ticks(n, false);
  double last = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double slot = std::floor(cfg.frame_time(k) / period + 1e-9);
    ticks[k] = k == 0 || slot > last;
    last = slot;
  }
  return ticks;
}

std::vector<FrameRecord> generate_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  Renderer renderer(cfg);
  const GroundPose camera{0.0, 0.0, 0.0};
  std::vector<FrameRecord> frames;
  frames.reserve(cfg.frame_count());
  for (std::size_t k = 0; k < cfg.frame_count(); ++k) {
    frames.push_back(renderer.render(k, {camera, leader_pose(cfg, cfg.frame_time(k))}));
  }
  return frames;
}

RunLog run_open_loop(const ScenarioConfig& scenario, const std::vector<FrameRecord>& frames, const FusionConfig& fusion,
                     const RunOptions& opts) {
  scenario.validate();
  Pipeline pipeline(scenario, fusion, opts.mode);
  RunLog log;
  for (const auto& f : frames) pipeline.process(f, log.rows);
  return log;
}

ClosedLoopResult run_closed_loop(const ScenarioConfig& scenario, const FusionConfig& fusion,
                                 const ControllerConfig& controller, const RunOptions& opts) {
  scenario.validate();
  controller.validate();
  Renderer renderer(scenario);
  Pipeline pipeline(scenario, fusion, opts.mode);
  FollowController follow(controller);
  const double dt = 1.0 / scenario.frame_rate;

  ClosedLoopResult out;
  GroundPose follower{scenario.follower_x, scenario.follower_z, scenario.follower_heading};
  for (std::size_t k = 0; k < scenario.frame_count(); ++k) {
    const double t = scenario.frame_time(k);
    const GroundPose leader = leader_pose(scenario, t);
    const FrameRecord f = renderer.render(k, {follower, leader});
    const std::size_t first_row = out.log.rows.size();
    const std::optional<Point3> fused = pipeline.process(f, out.log.rows);
    const ControlCommand cmd = fused ? follow.command(fused->x(), fused->z(), dt) : ControlCommand{};
    for (std::size_t i = first_row; i < out.log.rows.size(); ++i) {
      out.log.rows[i].steering = cmd.steering;
      out.log.rows[i].speed = cmd.speed;
    }
    out.trajectory.push_back({t, follower, leader, f.truth, cmd});

    follower.x += cmd.speed * std::sin(follower.heading) * dt;
    follower.z += cmd.speed * std::cos(follower.heading) * dt;
    follower.heading += cmd.speed / controller.wheelbase * std::tan(cmd.steering) * dt;
  }
  return out;
}

RunSummary summarize(const RunLog& log) {
  std::vector<double> fused_err, net_err, pnp_err, fused_z, raw_z;
  RunSummary s;
  for (const auto& r : log.rows) {
    if (r.failed()) {
      ++s.failed_rows;
      continue;
    }
    const double err = r.estimate->z() - r.truth.z();
    switch (r.src) {
      case EstimateSource::Fused:
        fused_err.push_back(err);
        fused_z.push_back(r.estimate->z());
        break;
      case EstimateSource::Network:
        net_err.push_back(err);
        raw_z.push_back(r.estimate->z());
        break;
      case EstimateSource::Pnp:
        pnp_err.push_back(err);
        raw_z.push_back(r.estimate->z());
        break;
    }
  }
  s.fused_rms = rms(fused_err);
  s.network_rms = rms(net_err);
  s.pnp_rms = rms(pnp_err);
  s.fused_jitter = diff_std(fused_z);
  s.raw_jitter = diff_std(raw_z);
  return s;
}

void write_run_log(std::ostream& out, const RunLog& log) {
  out << kCsvHeader << '\n';
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : log.rows) {
    const Point3 est = r.estimate.value_or(Point3(nan, nan, nan));
    out << fmt(r.t) << ',' << to_string(r.src) << ',' << fmt(r.truth.x()) << ',' << fmt(r.truth.y()) << ','
        << fmt(r.truth.z()) << ',' << fmt(est.x()) << ',' << fmt(est.y()) << ',' << fmt(est.z()) << ','
        << (r.failed() ? 1 : 0) << ',' << fmt(r.steering) << ',' << fmt(r.speed) << '\n';
  }
}

RunLog read_run_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::Parse, "run log is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw Error(Errc::Parse, "run log header must be '" + std::string(kCsvHeader) + "'");
  RunLog log;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 11) {
      throw Error(Errc::Parse, "run log line " + std::to_string(lineno) + ": expected 11 fields");
    }
    RunRow r;
    r.t = parse_real(f[0], lineno);
    try {
      r.src = source_from_string(f[1]);
    } catch (const Error& e) {
      throw Error(Errc::Parse, "run log line " + std::to_string(lineno) + ": " + e.what());
    }
    r.truth = {parse_real(f[2], lineno), parse_real(f[3], lineno), parse_real(f[4], lineno)};
    const Point3 est{parse_real(f[5], lineno), parse_real(f[6], lineno), parse_real(f[7], lineno)};
    if (f[8] != "0" && f[8] != "1") {
      throw Error(Errc::Parse, "run log line " + std::to_string(lineno) + ": src_failed must be 0 or 1");
    }
    if (f[8] == "0") {
      if (!est.allFinite()) throw Error(Errc::Parse, "run log line " + std::to_string(lineno) + ": non-finite estimate");
      r.estimate = est;
    }
    r.steering = parse_real(f[9], lineno);
    r.speed = parse_real(f[10], lineno);
    log.rows.push_back(r);
  }
  return log;
}

void save_run_log(const std::filesystem::path& path, const RunLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
  write_run_log(out, log);
  if (!out) throw Error(Errc::Io, "failed writing " + path.string());
}

RunLog load_run_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return read_run_log(in);
}

void write_frame_dump(std::ostream& out, const std::vector<FrameRecord>& frames) {
  for (const auto& f : frames) {
    nlohmann::json j;
    j["index"] = f.index;
    j["t"] = f.t;
    j["truth"] = vec_json(f.truth);
    j["box"] = f.box ? nlohmann::json::array({f.box->x1(), f.box->y1(), f.box->x2(), f.box->y2()}) : nlohmann::json();
    j["network"] = f.network_tick;
    j["pnp"] = f.pnp_tick;
    if (f.depth) {
      double sum = 0.0;
      for (std::size_t i = 0; i < f.depth->size(); ++i) {
        if (f.depth->mask()[i]) sum += f.depth->values()[i];
      }
      const std::size_t n = f.depth->valid_count();
      j["depth"] = {{"width", f.depth->width()}, {"height", f.depth->height()}, {"valid", n},
                    {"mean", n ? sum / static_cast<double>(n) : 0.0}};
    } else {
      j["depth"] = nullptr;
    }
    if (f.corrs) {
      auto list = [](const std::vector<Correspondence>& cs) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& c : cs) a.push_back({c.world.x(), c.world.y(), c.world.z(), c.image.u, c.image.v});
        return a;
      };
      j["reference_t"] = f.reference_t;
      j["fg"] = list(f.corrs->fg);
      j["bg"] = list(f.corrs->bg);
    }
    out << j.dump() << '\n';
  }
}

void write_follower_trajectory(std::ostream& out, const std::vector<FollowerSample>& samples) {
  out << "t,follower_x,follower_z,follower_heading,leader_x,leader_z,leader_heading,rel_x,rel_y,rel_z,steering,"
         "speed\n";
  for (const auto& s : samples) {
    out << fmt(s.t) << ',' << fmt(s.follower.x) << ',' << fmt(s.follower.z) << ',' << fmt(s.follower.heading) << ','
        << fmt(s.leader.x) << ',' << fmt(s.leader.z) << ',' << fmt(s.leader.heading) << ',' << fmt(s.relative.x())
        << ',' << fmt(s.relative.y()) << ',' << fmt(s.relative.z()) << ',' << fmt(s.command.steering) << ','
        << fmt(s.command.speed) << '\n';
  }
}

RunLog fuse_offline(const RunLog& raw, const FusionConfig& fusion) {
  std::vector<RunRow> rows;
  for (const auto& r : raw.rows) {
    if (r.src != EstimateSource::Fused) rows.push_back(r);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const RunRow& a, const RunRow& b) { return a.t < b.t; });

  DepthTracker tracker(fusion);
  RunLog out;
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    while (j < rows.size() && rows[j].t == rows[i].t) {
      const RunRow& r = rows[j];
      out.rows.push_back(r);
      if (!r.failed()) {
        try {
          tracker.ingest({*r.estimate, r.t, r.src});
        } catch (const Error&) {
          // A rejected measurement leaves the tracker unchanged; keep going.
        }
      }
      ++j;
    }
    RunRow fused{rows[i].t, EstimateSource::Fused, rows[i].truth, std::nullopt, rows[i].steering, rows[i].speed};
    if (tracker.state()) fused.estimate = tracker.fused_estimate(rows[i].t).position;
    out.rows.push_back(fused);
    i = j;
  }
  return out;
}

}  // namespace vfollow
