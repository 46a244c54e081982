#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "vfollow/io.hpp"

using namespace vfollow;

namespace {

DepthMap sample_map() {
  DepthMap dm(3, 2);
  dm.set(0, 0, 1.25);
  dm.set(0, 1, 2.5);
  dm.set(0, 2, 0.0);
  dm.set(1, 0, 4.0);
  dm.set(1, 1, -1.0);
  dm.set(1, 2, 7.75);
  return dm;
}

void check_same(const DepthMap& a, const DepthMap& b) {
  REQUIRE(a.width() == b.width());
  REQUIRE(a.height() == b.height());
  for (std::size_t r = 0; r < a.height(); ++r) {
    for (std::size_t c = 0; c < a.width(); ++c) {
      CHECK(a.valid(r, c) == b.valid(r, c));
      if (a.valid(r, c)) CHECK(a.depth(r, c) == b.depth(r, c));
    }
  }
}

}  // namespace

TEST_CASE("text depth maps read width, height and mark non-positive values invalid") {
  std::istringstream in("3 2\n1.25 2.5 0\n4 -1 7.75\n");
  const DepthMap dm = io::read_depth_text(in);
  check_same(dm, sample_map());
  CHECK(dm.valid_count() == 4);
}

TEST_CASE("text depth maps round-trip") {
  std::stringstream ss;
  io::write_depth_text(ss, sample_map());
  check_same(io::read_depth_text(ss), sample_map());
}

TEST_CASE("malformed text depth maps are parse errors") {
  std::istringstream short_rows("2 2\n1 2\n3\n");
  try {
    io::read_depth_text(short_rows);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Parse);
  }
  std::istringstream bad_header("x y\n");
  CHECK_THROWS_AS(io::read_depth_text(bad_header), Error);
}

TEST_CASE("PFM depth maps round-trip with float precision and bottom-to-top rows") {
  std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
  io::write_depth_pfm(ss, sample_map());
  const std::string bytes = ss.str();
  CHECK(bytes.rfind("Pf\n3 2\n-1", 0) == 0);
  // The first stored row is the bottom image row: 4, invalid (0), 7.75.
  const std::size_t header = bytes.find('\n', bytes.find('\n', 3) + 1) + 1;
  float first = 0.0f;
  std::memcpy(&first, bytes.data() + header, sizeof first);
  CHECK(first == 4.0f);
  std::stringstream in(bytes, std::ios::in | std::ios::binary);
  check_same(io::read_depth_pfm(in), sample_map());
}

TEST_CASE("intrinsics parse from YAML with or without an intrinsics section") {
  const CameraIntrinsics a = io::parse_intrinsics("fx: 300\nfy: 310\ncx: 160\ncy: 120\n");
  CHECK(a.fx == 300.0);
  CHECK(a.fy == 310.0);
  CHECK(a.cx == 160.0);
  CHECK(a.cy == 120.0);
  const CameraIntrinsics b = io::parse_intrinsics("intrinsics: {fx: 1, fy: 2, cx: 3, cy: 4}\n");
  CHECK(b.cy == 4.0);
  CHECK_THROWS_AS(io::parse_intrinsics("fx: 1\nfy: 1\ncx: 0\n"), Error);
  CHECK_THROWS_AS(io::parse_intrinsics("fx: 0\nfy: 1\ncx: 0\ncy: 0\n"), Error);
}

TEST_CASE("PGM images round-trip through 8 bits") {
  GrayImage img(4, 3);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) img.at(r, c) = static_cast<double>(r * 4 + c) / 11.0;
  std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
  io::write_pgm(ss, img);
  const GrayImage back = io::read_pgm(ss);
  REQUIRE(back.width() == 4);
  REQUIRE(back.height() == 3);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(back.at(r, c) - img.at(r, c)) <= 0.5 / 255.0 + 1e-12);
}

TEST_CASE("missing files are I/O errors") {
  try {
    io::load_depth("/nonexistent/dir/map.pfm");
    FAIL("expected an I/O error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Io);
    CHECK(e.kind() == ErrorKind::Io);
  }
}
