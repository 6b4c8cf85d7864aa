#pragma once

// Sources of per-frame score maps.
//
// OracleSegmenter renders ground-truth labels of a synthetic scene and
// corrupts them with a confusion-matrix noise model; FileSegmenter replays
// score maps recorded offline in the SMAP binary format:
//
//   "SMAP" | u32 width | u32 height | u32 classes | f32 data[w*h*classes]
//
// all little-endian, pixels row-major, classes innermost.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "semfuse/error.hpp"
#include "semfuse/fusion.hpp"
#include "semfuse/geometry.hpp"
#include "semfuse/io.hpp"
#include "semfuse/rasterizer.hpp"

namespace semfuse {

class SegmentationSource {
 public:
  virtual ~SegmentationSource() = default;
  virtual const ClassSet& class_set() const = 0;
  // `bgra` is the captured image (may be ignored by synthetic sources).
  virtual ScoreMap segment(const CameraFrame& frame, std::span<const std::uint8_t> bgra) const = 0;
};

struct NoiseModel {
  // Row = true class, column = emitted class; rows sum to one.
  std::vector<std::vector<double>> confusion;
  // Emitted distributions put concentration / (concentration + n - 1) on the
  // emitted class and spread the rest uniformly. Infinity gives one-hot maps.
  double concentration = 8.0;
  std::uint64_t seed = 0;

  static NoiseModel identity(std::size_t n, double concentration = 8.0, std::uint64_t seed = 0) {
    return symmetric(n, 0.0, concentration, seed);
  }

  // `flip` of every row's mass spread evenly over the other classes.
  static NoiseModel symmetric(std::size_t n, double flip, double concentration = 8.0,
                              std::uint64_t seed = 0) {
    NoiseModel m;
    m.confusion.assign(n, std::vector<double>(n, n > 1 ? flip / static_cast<double>(n - 1) : 0.0));
    for (std::size_t i = 0; i < n; ++i) m.confusion[i][i] = n > 1 ? 1.0 - flip : 1.0;
    m.concentration = concentration;
    m.seed = seed;
    return m;
  }

  void validate(std::size_t n) const {
    if (confusion.size() != n) throw ContractError("segmentation", "confusion matrix has wrong size");
    for (const auto& row : confusion) {
      if (row.size() != n) throw ContractError("segmentation", "confusion matrix is not square");
      double s = 0.0;
      for (double v : row) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
          throw ContractError("segmentation", "confusion entries must be finite and non-negative");
        }
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-9) throw ContractError("segmentation", "confusion row does not sum to 1");
    }
    if (!(concentration > 0.0)) throw ContractError("segmentation", "concentration must be positive");
  }

  double peak_mass(std::size_t n) const {
    if (n <= 1 || std::isinf(concentration)) return 1.0;
    return concentration / (concentration + static_cast<double>(n - 1));
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform double in [0, 1) from the top 53 bits; portable across stdlibs.
inline double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

inline constexpr std::uint8_t kUncoveredLabel = 0xFF;

// Per-pixel ground-truth class: majority label of the covering triangle's
// vertices. Three-way ties give `unknown`; uncovered pixels give
// kUncoveredLabel.
inline std::vector<std::uint8_t> render_label_image(const SemanticMesh& scene,
                                                    const CameraFrame& frame,
                                                    std::uint8_t unknown) {
  const auto r = render(scene, frame, /*with_triangle_ids=*/true);
  std::vector<std::uint8_t> out(r.triangle_ids.size(), kUncoveredLabel);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto id = r.triangle_ids[i];
    if (id < 0) continue;
    const auto& t = scene.triangles[static_cast<std::size_t>(id)];
    const auto a = scene.labels[t[0]], b = scene.labels[t[1]], c = scene.labels[t[2]];
    out[i] = (a == b || a == c) ? a : (b == c ? b : unknown);
  }
  return out;
}

inline ScoreMap oracle_segment(const SemanticMesh& scene, const ClassSet& classes,
                               const CameraFrame& frame, const NoiseModel& noise) {
  if (!scene.has_labels()) throw ContractError("segmentation", "scene has no ground-truth labels");
  const std::size_t n = classes.size();
  noise.validate(n);
  const auto unknown = static_cast<std::uint8_t>(classes.unknown_index());
  const auto truth = render_label_image(scene, frame, unknown);

  const double peak = noise.peak_mass(n);
  const double rest = n > 1 ? (1.0 - peak) / static_cast<double>(n - 1) : 0.0;
  std::vector<std::vector<double>> cumulative(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) cumulative[i][j] = (acc += noise.confusion[i][j]);
  }
  std::mt19937_64 rng(detail::splitmix64(noise.seed ^ detail::splitmix64(frame.frame_index())));

  ScoreMap out(frame.width(), frame.height(), n);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    std::size_t emitted = unknown;
    if (truth[i] != kUncoveredLabel) {
      if (truth[i] >= n) throw ContractError("segmentation", "scene label outside the class set");
      const double u = detail::unit_double(rng);
      const auto& cum = cumulative[truth[i]];
      emitted = n - 1;
      for (std::size_t j = 0; j < n; ++j) {
        if (u < cum[j]) {
          emitted = j;
          break;
        }
      }
    }
    double* px = out.data.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) px[j] = j == emitted ? peak : rest;
  }
  return out;
}

class OracleSegmenter : public SegmentationSource {
 public:
  OracleSegmenter(std::shared_ptr<const SemanticMesh> scene, ClassSet classes, NoiseModel noise)
      : scene_(std::move(scene)), classes_(std::move(classes)), noise_(std::move(noise)) {
    if (!scene_ || !scene_->has_labels()) {
      throw ContractError("segmentation", "oracle segmenter needs a labeled scene");
    }
    noise_.validate(classes_.size());
  }

  const ClassSet& class_set() const override { return classes_; }

  ScoreMap segment(const CameraFrame& frame, std::span<const std::uint8_t>) const override {
    return oracle_segment(*scene_, classes_, frame, noise_);
  }

 private:
  std::shared_ptr<const SemanticMesh> scene_;
  ClassSet classes_;
  NoiseModel noise_;
};

class ScoreMapLoadError : public Error {
 public:
  enum class Kind { kMissingFile, kMalformed, kDimensionMismatch, kInvalidProbabilities };

  ScoreMapLoadError(Kind kind, const std::string& what) : Error("segmentation", what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline constexpr double kScoreMapSumTolerance = 1e-3;

inline void write_score_map(const std::string& path, const ScoreMap& map) {
  static_assert(std::endian::native == std::endian::little);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("segmentation", "cannot write '" + path + "'");
  out.write("SMAP", 4);
  const std::uint32_t header[3] = {static_cast<std::uint32_t>(map.width),
                                   static_cast<std::uint32_t>(map.height),
                                   static_cast<std::uint32_t>(map.num_classes)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  std::vector<float> f(map.data.begin(), map.data.end());
  out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * 4));
  if (!out) throw FormatError("segmentation", "write failed for '" + path + "'");
}

// Loads a SMAP file. Pixels whose sum is off by at most 1e-3 are
// renormalized; anything worse is rejected.
inline ScoreMap read_score_map(const std::string& path) {
  using Kind = ScoreMapLoadError::Kind;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScoreMapLoadError(Kind::kMissingFile, "cannot open score map '" + path + "'");
  char magic[4];
  std::uint32_t header[3];
  if (!in.read(magic, 4) || std::memcmp(magic, "SMAP", 4) != 0) {
    throw ScoreMapLoadError(Kind::kMalformed, "'" + path + "' is not a SMAP file");
  }
  if (!in.read(reinterpret_cast<char*>(header), sizeof(header))) {
    throw ScoreMapLoadError(Kind::kMalformed, "truncated SMAP header in '" + path + "'");
  }
  if (header[0] == 0 || header[1] == 0 || header[2] == 0 || header[0] > 1u << 15 ||
      header[1] > 1u << 15 || header[2] > 255) {
    throw ScoreMapLoadError(Kind::kMalformed, "implausible SMAP dimensions in '" + path + "'");
  }
  ScoreMap map(static_cast<int>(header[0]), static_cast<int>(header[1]), header[2]);
  std::vector<float> f(map.data.size());
  if (!in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(f.size() * 4))) {
    throw ScoreMapLoadError(Kind::kMalformed, "truncated SMAP body in '" + path + "'");
  }
  for (std::size_t p = 0; p < map.pixel_count(); ++p) {
    double sum = 0.0;
    for (std::size_t c = 0; c < map.num_classes; ++c) {
      const double v = f[p * map.num_classes + c];
      if (!std::isfinite(v) || v < 0.0) {
        throw ScoreMapLoadError(Kind::kInvalidProbabilities,
                                "negative or non-finite probability in '" + path + "'");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kScoreMapSumTolerance) {
      throw ScoreMapLoadError(Kind::kInvalidProbabilities,
                              "pixel " + std::to_string(p) + " sums to " + std::to_string(sum) +
                                  " in '" + path + "'");
    }
    for (std::size_t c = 0; c < map.num_classes; ++c) {
      map.data[p * map.num_classes + c] = f[p * map.num_classes + c] / sum;
    }
  }
  return map;
}

// Replays `<directory>/frame_<index>.smap` (index zero-padded to 6 digits).
class FileSegmenter : public SegmentationSource {
 public:
  FileSegmenter(std::filesystem::path directory, ClassSet classes)
      : directory_(std::move(directory)), classes_(std::move(classes)) {}

  static std::string file_name(std::uint64_t frame_index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06llu.smap", static_cast<unsigned long long>(frame_index));
    return buf;
  }

  const ClassSet& class_set() const override { return classes_; }

  ScoreMap segment(const CameraFrame& frame, std::span<const std::uint8_t>) const override {
    return file_segment((directory_ / file_name(frame.frame_index())).string(), frame, classes_);
  }

  static ScoreMap file_segment(const std::string& path, const CameraFrame& frame,
                               const ClassSet& classes) {
    auto map = read_score_map(path);
    if (map.width != frame.width() || map.height != frame.height() ||
        map.num_classes != classes.size()) {
      throw ScoreMapLoadError(ScoreMapLoadError::Kind::kDimensionMismatch,
                              "score map '" + path + "' does not match frame " +
                                  std::to_string(frame.frame_index()));
    }
    return map;
  }

 private:
  std::filesystem::path directory_;
  ClassSet classes_;
};

// Argmax class per pixel as an 8-bit PGM.
inline void write_argmax_pgm(const std::string& path, const ScoreMap& map, std::size_t unknown) {
  io::GrayImage img;
  img.width = map.width;
  img.height = map.height;
  img.pixels.resize(map.pixel_count());
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      img.pixels[static_cast<std::size_t>(y) * map.width + x] =
          static_cast<std::uint16_t>(argmax_class(map.pixel(x, y), unknown));
    }
  }
  io::write_pgm(path, img);
}

}  // namespace semfuse
