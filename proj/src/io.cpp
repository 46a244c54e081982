#include "vfollow/io.hpp"

#include <yaml-cpp/yaml.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace vfollow::io {

namespace {

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  return out;
}

bool is_pfm(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext == ".pfm";
}

float swap_bytes(float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  bits = ((bits & 0xFFu) << 24) | ((bits & 0xFF00u) << 8) | ((bits >> 8) & 0xFF00u) | (bits >> 24);
  return std::bit_cast<float>(bits);
}

float to_little_endian(float v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return swap_bytes(v);
}

}  // namespace

DepthMap read_depth_text(std::istream& in) {
  long long w = 0, h = 0;
  if (!(in >> w >> h) || w <= 0 || h <= 0) throw Error(Errc::Parse, "depth text: bad \"width height\" header");
  DepthMap dm(static_cast<std::size_t>(w), static_cast<std::size_t>(h));
  for (std::size_t r = 0; r < dm.height(); ++r) {
    for (std::size_t c = 0; c < dm.width(); ++c) {
      std::string token;
      if (!(in >> token)) throw Error(Errc::Parse, "depth text: truncated at row " + std::to_string(r));
      double d = 0.0;
      try {
        std::size_t used = 0;
        d = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        // stod rejects "nan"/"inf" spellings on some platforms; treat them as invalid cells.
        if (token != "nan" && token != "NaN" && token != "inf" && token != "-inf") {
          throw Error(Errc::Parse, "depth text: bad value '" + token + "'");
        }
        d = 0.0;
      }
      dm.set(r, c, d);
    }
  }
  return dm;
}

void write_depth_text(std::ostream& out, const DepthMap& dm) {
  out << dm.width() << ' ' << dm.height() << '\n';
  out.precision(17);
  for (std::size_t r = 0; r < dm.height(); ++r) {
    for (std::size_t c = 0; c < dm.width(); ++c) {
      if (c) out << ' ';
      out << (dm.valid(r, c) ? dm.depth(r, c) : 0.0);
    }
    out << '\n';
  }
}

DepthMap read_depth_pfm(std::istream& in) {
  std::string magic;
  long long w = 0, h = 0;
  double scale = 0.0;
  if (!(in >> magic) || magic != "Pf") throw Error(Errc::Parse, "pfm: expected single-channel \"Pf\" header");
  if (!(in >> w >> h >> scale) || w <= 0 || h <= 0 || scale == 0.0) throw Error(Errc::Parse, "pfm: bad header");
  in.get();  // single whitespace before the raster
  const bool little = scale < 0.0;
  const bool swap = little != (std::endian::native == std::endian::little);
  DepthMap dm(static_cast<std::size_t>(w), static_cast<std::size_t>(h));
  std::vector<float> row(dm.width());
  for (std::size_t i = 0; i < dm.height(); ++i) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) throw Error(Errc::Parse, "pfm: truncated raster");
    const std::size_t r = dm.height() - 1 - i;
    for (std::size_t c = 0; c < dm.width(); ++c) dm.set(r, c, static_cast<double>(swap ? swap_bytes(row[c]) : row[c]));
  }
  return dm;
}

void write_depth_pfm(std::ostream& out, const DepthMap& dm) {
  out << "Pf\n" << dm.width() << ' ' << dm.height() << "\n-1.0\n";
  std::vector<float> row(dm.width());
  for (std::size_t i = 0; i < dm.height(); ++i) {
    const std::size_t r = dm.height() - 1 - i;
    for (std::size_t c = 0; c < dm.width(); ++c) {
      row[c] = to_little_endian(dm.valid(r, c) ? static_cast<float>(dm.depth(r, c)) : 0.0f);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
}

DepthMap load_depth(const std::filesystem::path& path) {
  if (is_pfm(path)) {
    auto in = open_in(path, std::ios::in | std::ios::binary);
    return read_depth_pfm(in);
  }
  auto in = open_in(path);
  return read_depth_text(in);
}

void save_depth(const std::filesystem::path& path, const DepthMap& dm) {
  if (is_pfm(path)) {
    auto out = open_out(path, std::ios::out | std::ios::binary);
    write_depth_pfm(out, dm);
  } else {
    auto out = open_out(path);
    write_depth_text(out, dm);
  }
}

CameraIntrinsics parse_intrinsics(const std::string& yaml_text) {
  try {
    const YAML::Node node = YAML::Load(yaml_text);
    const YAML::Node root = node["intrinsics"] ? node["intrinsics"] : node;
    for (const char* key : {"fx", "fy", "cx", "cy"}) {
      if (!root[key]) throw Error(Errc::Parse, std::string("intrinsics: missing key '") + key + "'");
    }
    return CameraIntrinsics::make(root["fx"].as<double>(), root["fy"].as<double>(), root["cx"].as<double>(),
                                  root["cy"].as<double>());
  } catch (const YAML::Exception& e) {
    throw Error(Errc::Parse, std::string("intrinsics: ") + e.what());
  }
}

CameraIntrinsics load_intrinsics(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_intrinsics(ss.str());
}

GrayImage read_pgm(std::istream& in) {
  std::string magic;
  if (!(in >> magic) || magic != "P5") throw Error(Errc::Parse, "pgm: expected binary P5 header");
  auto next_int = [&]() {
    // Header fields may be separated by comments.
    while (true) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      long long v = 0;
      if (!(in >> v)) throw Error(Errc::Parse, "pgm: bad header");
      return v;
    }
  };
  const long long w = next_int(), h = next_int(), maxval = next_int();
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) throw Error(Errc::Parse, "pgm: only 8-bit images are supported");
  in.get();
  std::vector<unsigned char> raw(static_cast<std::size_t>(w * h));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw Error(Errc::Parse, "pgm: truncated raster");
  std::vector<double> data(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) data[i] = std::min(1.0, raw[i] / static_cast<double>(maxval));
  return {static_cast<std::size_t>(w), static_cast<std::size_t>(h), std::move(data)};
}

void write_pgm(std::ostream& out, const GrayImage& img) {
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  for (double v : img.data()) out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
}

GrayImage load_pgm(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  return read_pgm(in);
}

}  // namespace vfollow::io
