#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "vfollow/config.hpp"
#include "vfollow/error.hpp"
#include "vfollow/eval.hpp"
#include "vfollow/io.hpp"
#include "vfollow/plot.hpp"
#include "vfollow/pnp.hpp"
#include "vfollow/sim.hpp"
#include "vfollow/vnl.hpp"

namespace {

using namespace vfollow;
using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitIo = 3;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation: return kExitValidation;
    case ErrorKind::Numerical: return kExitNumerical;
    case ErrorKind::Io: return kExitIo;
  }
  return kExitValidation;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot open " + path + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error(Errc::Io, "failed writing " + path);
}

// Writes to `path`, or to stdout when it is empty.
void emit_json(const json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  finish(out, path);
}

SourceMode parse_mode(const std::string& s) {
  if (s == "both") return SourceMode::Both;
  if (s == "network") return SourceMode::NetworkOnly;
  if (s == "pnp") return SourceMode::PnpOnly;
  throw Error(Errc::InvalidArgument, "--mode must be both, network or pnp");
}

RunConfig config_with_seed(const std::string& path, const std::optional<std::uint64_t>& seed) {
  RunConfig cfg = path.empty() ? RunConfig{} : load_run_config(path);
  if (seed) cfg.scenario.seed = *seed;
  return cfg;
}

json pose_json(const PnPSolution& s) {
  const auto& r = s.pose.rotation();
  const auto& t = s.pose.translation();
  return {{"rotation", {{r(0, 0), r(0, 1), r(0, 2)}, {r(1, 0), r(1, 1), r(1, 2)}, {r(2, 0), r(2, 1), r(2, 2)}}},
          {"translation", {t.x(), t.y(), t.z()}},
          {"reprojection_rms", s.reprojection_rms},
          {"points_used", s.points_used}};
}

struct SimulateArgs {
  std::string config, out, frames, mode = "both";
  std::optional<std::uint64_t> seed;
};

void cmd_simulate(const SimulateArgs& a) {
  const RunConfig cfg = config_with_seed(a.config, a.seed);
  const SourceMode mode = parse_mode(a.mode);
  const auto frames = generate_scenario(cfg.scenario);
  const RunLog log = run_open_loop(cfg.scenario, frames, cfg.fusion, {mode});
  save_run_log(a.out, log);
  if (!a.frames.empty()) {
    std::ofstream out = open_out(a.frames);
    write_frame_dump(out, frames);
    finish(out, a.frames);
  }
  const RunSummary s = summarize(log);
  std::cout << json{{"frames", frames.size()},
                    {"rows", log.rows.size()},
                    {"failed_rows", s.failed_rows},
                    {"fused_rms", s.fused_rms},
                    {"network_rms", s.network_rms},
                    {"pnp_rms", s.pnp_rms},
                    {"fused_jitter", s.fused_jitter},
                    {"raw_jitter", s.raw_jitter}}
                   .dump()
            << '\n';
}

struct FuseArgs {
  std::string input, out, config;
};

void cmd_fuse(const FuseArgs& a) {
  const FusionConfig fusion = a.config.empty() ? FusionConfig{} : load_run_config(a.config).fusion;
  save_run_log(a.out, fuse_offline(load_run_log(a.input), fusion));
}

struct PnpArgs {
  std::string input, intrinsics, out;
  std::vector<double> prev;
  std::string scale = "determinant";
};

void cmd_pnp_solve(const PnpArgs& a) {
  const LabeledCorrespondences corrs = load_correspondences(a.input);
  // Without intrinsics the image coordinates are taken as normalized rays.
  const CameraIntrinsics intr = a.intrinsics.empty() ? CameraIntrinsics{1.0, 1.0, 0.0, 0.0} : io::load_intrinsics(a.intrinsics);
  PnPOptions opts;
  if (a.scale == "image_rows") {
    opts.scale = DltScale::ImageRows;
  } else if (a.scale != "determinant") {
    throw Error(Errc::InvalidArgument, "--scale must be determinant or image_rows");
  }
  json j;
  if (!a.prev.empty()) {
    if (a.prev.size() != 3) throw Error(Errc::InvalidArgument, "--prev needs three values X Y Z");
    const PnPInterpolation r = pnp_interpolate_position({a.prev[0], a.prev[1], a.prev[2]}, corrs.fg, corrs.bg, intr, opts);
    j = {{"position", {r.position.x(), r.position.y(), r.position.z()}},
         {"foreground", pose_json(r.combined)},
         {"background", pose_json(r.ego)}};
  } else {
    j = pose_json(solve_pnp(corrs.fg, intr, opts));
    if (!corrs.bg.empty()) j["background"] = pose_json(solve_pnp(corrs.bg, intr, opts));
  }
  emit_json(j, a.out);
}

struct EvalArgs {
  std::string gt, pred, intrinsics, out;
  double threshold = 1.25;
  bool conventional = false;
  bool vnl = false;
  std::uint64_t seed = 0;
  std::size_t groups = 1000;
  TripletConstraints constraints;
  double beta_deg = 30.0, alpha_deg = 120.0;
};

void cmd_eval_depth(const EvalArgs& a) {
  const DepthMap gt = io::load_depth(a.gt);
  const DepthMap pred = io::load_depth(a.pred);
  const DepthMetrics m = depth_metrics(gt, pred, {a.threshold, a.conventional});
  json j{{"abs_rel", m.abs_rel}, {"sq_rel", m.sq_rel}, {"rms", m.rms}, {"log_rms", m.log_rms}, {"accuracy", m.accuracy}};
  if (a.vnl) {
    // Default camera: focal length equal to the larger image side, centered.
    const double side = static_cast<double>(std::max(gt.width(), gt.height()));
    const CameraIntrinsics intr =
        a.intrinsics.empty()
            ? CameraIntrinsics{side, side, 0.5 * static_cast<double>(gt.width()), 0.5 * static_cast<double>(gt.height())}
            : io::load_intrinsics(a.intrinsics);
    TripletConstraints c = a.constraints;
    c.beta_min = a.beta_deg * std::numbers::pi / 180.0;
    c.alpha_max = a.alpha_deg * std::numbers::pi / 180.0;
    j["vnl"] = vnl_between_depth_maps(intr, pred, gt, c, a.groups, a.seed);
  }
  emit_json(j, a.out);
}

struct TrackArgs {
  std::string config, out, trajectory, mode = "both";
  std::optional<std::uint64_t> seed;
};

void cmd_track(const TrackArgs& a) {
  const RunConfig cfg = config_with_seed(a.config, a.seed);
  const ClosedLoopResult r = run_closed_loop(cfg.scenario, cfg.fusion, cfg.controller, {parse_mode(a.mode)});
  save_run_log(a.out, r.log);
  if (!a.trajectory.empty()) {
    std::ofstream out = open_out(a.trajectory);
    write_follower_trajectory(out, r.trajectory);
    finish(out, a.trajectory);
  }
  const FollowerSample& last = r.trajectory.back();
  std::cout << json{{"frames", r.trajectory.size()},
                    {"final_lateral", last.relative.x()},
                    {"final_depth", last.relative.z()},
                    {"final_speed", last.command.speed}}
                   .dump()
            << '\n';
}

struct PlotArgs {
  std::string input, out;
  PlotOptions opts;
};

void cmd_plot(const PlotArgs& a) {
  const RunLog log = load_run_log(a.input);
  std::ofstream out = open_out(a.out);
  write_depth_plot(out, log, a.opts);
  finish(out, a.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monocular vehicle-following toolkit: simulation, depth fusion, PnP and metrics"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a scenario and run open-loop fusion");
  simulate->add_option("--config", sim.config, "Scenario YAML");
  simulate->add_option("--seed", sim.seed, "Override the scenario seed (the config default is 0)");
  simulate->add_option("--out", sim.out, "Run log CSV")->required();
  simulate->add_option("--frames", sim.frames, "Frame dump, one JSON object per line");
  simulate->add_option("--mode", sim.mode, "Sources to fuse: both, network or pnp");

  FuseArgs fu;
  auto* fuse = app.add_subcommand("fuse", "Fuse recorded raw measurements offline");
  fuse->add_option("--input", fu.input, "Run log CSV with network and pnp rows")->required();
  fuse->add_option("--out", fu.out, "Fused run log CSV")->required();
  fuse->add_option("--config", fu.config, "YAML with a fusion section");

  PnpArgs pa;
  auto* pnp = app.add_subcommand("pnp-solve", "Solve a pose from a correspondence JSONL file");
  pnp->add_option("--input", pa.input, "Correspondences (X, Y, Z, u, v, set)")->required();
  pnp->add_option("--intrinsics", pa.intrinsics, "Intrinsics YAML; omitted means normalized coordinates");
  pnp->add_option("--prev", pa.prev, "Previous target position X Y Z; interpolates the target position")
      ->expected(3);
  pnp->add_option("--scale", pa.scale, "DLT scale rule: determinant or image_rows")->capture_default_str();
  pnp->add_option("--out", pa.out, "Pose JSON (default: stdout)");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval-depth", "Compare a predicted depth map against ground truth");
  eval->add_option("--gt", ea.gt, "Ground-truth depth (.pfm or text)")->required();
  eval->add_option("--pred", ea.pred, "Predicted depth (.pfm or text)")->required();
  eval->add_option("--threshold", ea.threshold, "Accuracy ratio threshold")->capture_default_str();
  eval->add_flag("--conventional-sq-rel", ea.conventional, "Use mean (gt - pred)^2 / gt for sq_rel");
  eval->add_flag("--vnl", ea.vnl, "Also report the virtual-normal score");
  eval->add_option("--seed", ea.seed, "Triplet sampling seed")->capture_default_str();
  eval->add_option("--groups", ea.groups, "Number of triplets")->capture_default_str();
  eval->add_option("--theta", ea.constraints.theta_min, "Minimum pairwise distance, m")->capture_default_str();
  eval->add_option("--beta", ea.beta_deg, "Minimum triplet angle, degrees")->capture_default_str();
  eval->add_option("--alpha", ea.alpha_deg, "Maximum triplet angle, degrees")->capture_default_str();
  eval->add_option("--intrinsics", ea.intrinsics, "Intrinsics YAML for back-projection");
  eval->add_option("--out", ea.out, "Metrics JSON (default: stdout)");

  TrackArgs ta;
  auto* track = app.add_subcommand("track", "Run closed-loop following");
  track->add_option("--config", ta.config, "Scenario YAML with controller section");
  track->add_option("--seed", ta.seed, "Override the scenario seed (the config default is 0)");
  track->add_option("--out", ta.out, "Run log CSV")->required();
  track->add_option("--trajectory", ta.trajectory, "Follower and leader trajectory CSV");
  track->add_option("--mode", ta.mode, "Sources to fuse: both, network or pnp");

  PlotArgs pl;
  auto* plot = app.add_subcommand("plot", "Render a run log as SVG depth charts");
  plot->add_option("--input", pl.input, "Run log CSV")->required();
  plot->add_option("--out", pl.out, "SVG output")->required();
  plot->add_option("--title", pl.opts.title, "Chart title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "vfollow: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (*simulate) cmd_simulate(sim);
    if (*fuse) cmd_fuse(fu);
    if (*pnp) cmd_pnp_solve(pa);
    if (*eval) cmd_eval_depth(ea);
    if (*track) cmd_track(ta);
    if (*plot) cmd_plot(pl);
  } catch (const Error& e) {
    std::cerr << "vfollow: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "vfollow: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}
