#pragma once

// Small text/image formats: 4x4 matrix sidecars, trajectory files (one
// row-major pose per line) and binary PGM (P5, 8 or 16 bit).

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "semfuse/error.hpp"
#include "semfuse/geometry.hpp"

namespace semfuse::io {

inline void write_matrix(std::ostream& out, const Mat4& m) {
  out << std::setprecision(17);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (r || c) out << ' ';
      out << m(r, c);
    }
  }
}

inline Mat4 parse_matrix(const std::string& text) {
  std::istringstream in(text);
  Mat4 m;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (!(in >> m(r, c))) throw FormatError("io", "expected 16 decimals in matrix");
    }
  }
  std::string extra;
  if (in >> extra) throw FormatError("io", "trailing data after 16 matrix entries");
  return m;
}

inline Mat4 read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("io", "cannot open matrix file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_matrix(ss.str());
}

inline void write_matrix_file(const std::string& path, const Mat4& m) {
  std::ofstream out(path);
  if (!out) throw FormatError("io", "cannot write '" + path + "'");
  write_matrix(out, m);
  out << '\n';
}

inline std::vector<Mat4> read_poses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("io", "cannot open trajectory file '" + path + "'");
  std::vector<Mat4> poses;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    poses.push_back(parse_matrix(line));
  }
  return poses;
}

inline void write_poses(const std::string& path, const std::vector<Mat4>& poses) {
  std::ofstream out(path);
  if (!out) throw FormatError("io", "cannot write '" + path + "'");
  for (const auto& p : poses) {
    write_matrix(out, p);
    out << '\n';
  }
}

struct GrayImage {
  int width = 0;
  int height = 0;
  int max_value = 255;
  std::vector<std::uint16_t> pixels;  // row-major

  std::uint16_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

inline void write_pgm(const std::string& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("io", "cannot write '" + path + "'");
  out << "P5\n" << img.width << ' ' << img.height << '\n' << img.max_value << '\n';
  const bool wide = img.max_value > 255;
  for (auto v : img.pixels) {
    if (wide) {
      const char be[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
      out.write(be, 2);
    } else {
      out.put(static_cast<char>(v));
    }
  }
}

inline GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("io", "cannot open '" + path + "'");
  auto next_token = [&in]() {
    std::string tok;
    char ch;
    while (in.get(ch)) {
      if (ch == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(ch);
    }
    return tok;
  };
  if (next_token() != "P5") throw FormatError("io", "'" + path + "' is not a binary PGM");
  GrayImage img;
  try {
    img.width = std::stoi(next_token());
    img.height = std::stoi(next_token());
    img.max_value = std::stoi(next_token());
  } catch (const std::exception&) {
    throw FormatError("io", "malformed PGM header in '" + path + "'");
  }
  if (img.width <= 0 || img.height <= 0 || img.max_value <= 0 || img.max_value > 65535) {
    throw FormatError("io", "invalid PGM header in '" + path + "'");
  }
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  img.pixels.resize(n);
  const bool wide = img.max_value > 255;
  for (std::size_t i = 0; i < n; ++i) {
    unsigned char b[2] = {0, 0};
    if (!in.read(reinterpret_cast<char*>(b), wide ? 2 : 1)) {
      throw FormatError("io", "truncated PGM '" + path + "'");
    }
    img.pixels[i] = wide ? static_cast<std::uint16_t>((b[0] << 8) | b[1]) : b[0];
  }
  return img;
}

}  // namespace semfuse::io
