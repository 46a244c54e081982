#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "vfollow/io.hpp"
#include "vfollow/pnp.hpp"

using namespace vfollow;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int status = -1;
  std::string out;  // stdout and stderr together
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string("\"") + VFOLLOW_CLI + "\" " + args + " 2>&1";
  RunResult r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int raw = pclose(p);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("vfollow_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("every command has help") {
  for (const char* cmd : {"", "simulate", "fuse", "pnp-solve", "eval-depth", "track", "plot"}) {
    const RunResult r = run(std::string(cmd) + " --help");
    CHECK(r.status == 0);
    CHECK(r.out.find("Usage") != std::string::npos);
  }
}

TEST_CASE("eval-depth on identical maps") {
  TempDir tmp;
  DepthMap dm(8, 6);
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 8; ++c) dm.set(r, c, 1.0 + 0.1 * static_cast<double>(r + c));
  io::save_depth(tmp / "d.pfm", dm);
  const RunResult r = run("eval-depth --gt " + (tmp / "d.pfm") + " --pred " + (tmp / "d.pfm"));
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["abs_rel"].get<double>() == 0.0);
  CHECK(j["sq_rel"].get<double>() == 0.0);
  CHECK(j["rms"].get<double>() == 0.0);
  CHECK(j["log_rms"].get<double>() == 0.0);
  CHECK(j["accuracy"].get<double>() == 1.0);
}

TEST_CASE("eval-depth with the virtual-normal score") {
  TempDir tmp;
  DepthMap dm(64, 48);
  for (std::size_t r = 0; r < 48; ++r)
    for (std::size_t c = 0; c < 64; ++c) dm.set(r, c, 2.0);
  io::save_depth(tmp / "plane.pfm", dm);
  const RunResult r =
      run("eval-depth --vnl --theta 0.05 --groups 100 --gt " + (tmp / "plane.pfm") + " --pred " + (tmp / "plane.pfm"));
  REQUIRE(r.status == 0);
  CHECK(nlohmann::json::parse(r.out)["vnl"].get<double>() == 0.0);
}

TEST_CASE("pnp-solve with five points is a numerical failure") {
  TempDir tmp;
  LabeledCorrespondences lc;
  for (int i = 0; i < 5; ++i) {
    const Point3 p(0.3 * i - 0.6, 0.1 * i * i - 0.4, 4.0 + 0.2 * i);
    lc.fg.push_back({p, Pixel{p.x() / p.z(), p.y() / p.z()}});
  }
  {
    std::ofstream out(tmp / "five.jsonl");
    write_correspondences(out, lc);
  }
  const RunResult r = run("pnp-solve --input " + (tmp / "five.jsonl"));
  CHECK(r.status == 2);
  CHECK(r.out.find("insufficient points (5 < 6)") != std::string::npos);
  CHECK(line_count(r.out) == 1);
}

TEST_CASE("pnp-solve recovers a pose") {
  TempDir tmp;
  LabeledCorrespondences lc;
  for (int i = 0; i < 12; ++i) {
    const Point3 p(0.37 * (i % 4) - 0.5, 0.29 * (i % 3) - 0.3, 4.0 + 0.41 * (i % 5));
    const Point3 q = p + Point3(0.1, 0.0, -0.2);
    lc.fg.push_back({p, Pixel{q.x() / q.z(), q.y() / q.z()}});
  }
  {
    std::ofstream out(tmp / "c.jsonl");
    write_correspondences(out, lc);
  }
  const RunResult r = run("pnp-solve --input " + (tmp / "c.jsonl"));
  REQUIRE(r.status == 0);
  const auto t = nlohmann::json::parse(r.out)["translation"];
  CHECK(t[0].get<double>() == doctest::Approx(0.1));
  CHECK(t[1].get<double>() == doctest::Approx(0.0).scale(1e-9));
  CHECK(t[2].get<double>() == doctest::Approx(-0.2));
}

TEST_CASE("simulate is deterministic and fuse replays its log") {
  TempDir tmp;
  const std::string cfg = std::string(VFOLLOW_SOURCE_DIR) + "/configs/standard.yaml";
  const RunResult a = run("simulate --config " + cfg + " --seed 3 --out " + (tmp / "a.csv") + " --frames " +
                          (tmp / "a.jsonl"));
  const RunResult b = run("simulate --config " + cfg + " --seed 3 --out " + (tmp / "b.csv") + " --frames " +
                          (tmp / "b.jsonl"));
  REQUIRE(a.status == 0);
  REQUIRE(b.status == 0);
  CHECK(a.out == b.out);
  CHECK(slurp(tmp / "a.csv") == slurp(tmp / "b.csv"));
  CHECK(slurp(tmp / "a.jsonl") == slurp(tmp / "b.jsonl"));
  CHECK(slurp(tmp / "a.csv").rfind("t,src,gt_x,gt_y,gt_z,est_x,est_y,est_z,src_failed,steering,speed\n", 0) == 0);

  const RunResult f = run("fuse --config " + cfg + " --input " + (tmp / "a.csv") + " --out " + (tmp / "f.csv"));
  CHECK(f.status == 0);
  CHECK(fs::file_size(tmp / "f.csv") > 0);

  const RunResult p = run("plot --input " + (tmp / "a.csv") + " --out " + (tmp / "a.svg"));
  CHECK(p.status == 0);
  CHECK(slurp(tmp / "a.svg").find("<svg") != std::string::npos);
}

TEST_CASE("track writes a log and a trajectory") {
  TempDir tmp;
  const std::string cfg = std::string(VFOLLOW_SOURCE_DIR) + "/configs/follow.yaml";
  const RunResult r =
      run("track --config " + cfg + " --out " + (tmp / "t.csv") + " --trajectory " + (tmp / "traj.csv"));
  REQUIRE(r.status == 0);
  CHECK(line_count(slurp(tmp / "traj.csv")) > 100);
}

TEST_CASE("exit codes for bad input") {
  TempDir tmp;
  const RunResult missing = run("eval-depth --gt " + (tmp / "none.pfm") + " --pred " + (tmp / "none.pfm"));
  CHECK(missing.status == 3);
  CHECK(line_count(missing.out) == 1);
  CHECK(missing.out.rfind("vfollow: ", 0) == 0);

  const RunResult no_config = run("simulate --config " + (tmp / "none.yaml") + " --out " + (tmp / "x.csv"));
  CHECK(no_config.status == 3);

  const RunResult unknown = run("simulate --bogus");
  CHECK(unknown.status == 1);

  {
    std::ofstream bad(tmp / "bad.yaml");
    bad << "durration: 3\n";
  }
  const RunResult invalid = run("simulate --config " + (tmp / "bad.yaml") + " --out " + (tmp / "x.csv"));
  CHECK(invalid.status == 1);
  CHECK(line_count(invalid.out) == 1);

  DepthMap a(4, 4), b(5, 4);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) a.set(r, c, 1.0);
  io::save_depth(tmp / "a.pfm", a);
  io::save_depth(tmp / "b.pfm", b);
  const RunResult shape = run("eval-depth --gt " + (tmp / "a.pfm") + " --pred " + (tmp / "b.pfm"));
  CHECK(shape.status == 1);

  const RunResult empty = run("eval-depth --gt " + (tmp / "b.pfm") + " --pred " + (tmp / "b.pfm"));
  CHECK(empty.status == 2);
}
