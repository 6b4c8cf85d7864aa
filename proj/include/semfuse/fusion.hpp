#pragma once

// Recursive Bayesian per-vertex label fusion.
//
// Every vertex keeps a class distribution, initialized uniform. For each
// segmented frame, the vertices that pass the depth visibility test are
// projected into the score map, and their distribution is multiplied
// element-wise by the distribution of the pixel they land on, then
// renormalized. Observations whose most likely class is Unknown are ignored
// for vertices closer than `near_skip_distance` to the camera.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semfuse/error.hpp"
#include "semfuse/geometry.hpp"
#include "semfuse/rasterizer.hpp"

namespace semfuse {

// Per-pixel class distributions, row-major, `num_classes` values per pixel.
struct ScoreMap {
  int width = 0;
  int height = 0;
  std::size_t num_classes = 0;
  std::vector<double> data;

  ScoreMap() = default;
  ScoreMap(int w, int h, std::size_t classes)
      : width(w), height(h), num_classes(classes),
        data(static_cast<std::size_t>(w) * h * classes, 0.0) {}

  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width) * height; }

  std::span<double> pixel(int x, int y) {
    return {data.data() + (static_cast<std::size_t>(y) * width + x) * num_classes, num_classes};
  }
  std::span<const double> pixel(int x, int y) const {
    return {data.data() + (static_cast<std::size_t>(y) * width + x) * num_classes, num_classes};
  }
};

// Index of the largest entry. Ties go to `unknown_index` when it is among the
// maxima, otherwise to the lowest index.
inline std::size_t argmax_class(std::span<const double> p, std::size_t unknown_index) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  if (unknown_index < p.size() && p[unknown_index] == p[best]) return unknown_index;
  return best;
}

namespace detail {

inline bool all_finite(std::span<const double> p) {
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) return false;
  }
  return true;
}

// Posterior = normalize(max(prior * likelihood, floor)), with a final pass
// that keeps every entry at or above `floor` after normalization.
inline void bayes_update_unchecked(std::span<double> prior, std::span<const double> likelihood,
                                   double floor) {
  const std::size_t n = prior.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    prior[i] = std::max(prior[i] * likelihood[i], floor);
    sum += prior[i];
  }
  for (std::size_t i = 0; i < n; ++i) prior[i] /= sum;
  if (floor <= 0.0) return;
  // Renormalizing can push floored entries slightly below the floor; pin them
  // and rescale the remaining mass. Converges in at most n passes.
  for (std::size_t pass = 0; pass < n; ++pass) {
    double pinned = 0.0, free = 0.0;
    std::size_t npinned = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (prior[i] <= floor) {
        ++npinned;
        pinned += floor;
      } else {
        free += prior[i];
      }
    }
    bool below = false;
    for (std::size_t i = 0; i < n; ++i) below |= prior[i] < floor;
    if (!below || npinned == n) return;
    const double scale = (1.0 - pinned) / free;
    for (std::size_t i = 0; i < n; ++i) prior[i] = prior[i] <= floor ? floor : prior[i] * scale;
  }
}

}  // namespace detail

// In-place form used by the fusion loop.
inline void bayes_update(std::span<double> prior, std::span<const double> likelihood,
                         double epsilon_floor) {
  if (prior.size() != likelihood.size()) {
    throw ContractError("fusion", "prior and likelihood have different class counts");
  }
  if (!detail::all_finite(prior) || !detail::all_finite(likelihood)) {
    throw ContractError("fusion", "non-finite or negative probability");
  }
  detail::bayes_update_unchecked(prior, likelihood, epsilon_floor);
}

inline ClassDistribution bayes_update(const ClassDistribution& prior,
                                      const ClassDistribution& likelihood,
                                      double epsilon_floor) {
  ClassDistribution out = prior;
  bayes_update(out.values(), likelihood.values(), epsilon_floor);
  return out;
}

struct FusionConfig {
  double near_skip_distance = 2.0;  // <= 0 disables the near-skip rule
  double epsilon_floor = 1e-6;
  double visibility_tolerance = kDefaultVisibilityTolerance;
};

struct FusionState {
  SemanticMesh mesh;
  ClassSet class_set;
  FusionConfig config;
  std::uint64_t frames_fused = 0;
};

struct FuseReport {
  std::size_t updated = 0;
  std::size_t skipped_near = 0;
  std::size_t invisible = 0;
  std::vector<std::uint32_t> skipped_near_vertices;  // ascending
};

inline FusionState init_state(SemanticMesh mesh, const ClassSet& class_set,
                              const FusionConfig& config = {}) {
  if (class_set.size() == 0) throw ContractError("fusion", "empty class set");
  mesh.validate();
  mesh.reset_distributions(class_set.size());
  return FusionState{std::move(mesh), class_set, config, 0};
}

inline FuseReport fuse_frame(FusionState& state, const CameraFrame& frame,
                             const ScoreMap& score_map) {
  if (score_map.width != frame.width() || score_map.height != frame.height()) {
    throw ContractError("fusion", "score map dimensions do not match the camera frame");
  }
  if (score_map.num_classes != state.class_set.size()) {
    throw ContractError("fusion", "score map class count does not match the class set");
  }
  const auto depth = render_depth(state.mesh, frame);
  const auto visible = visible_vertices(state.mesh, frame, depth, state.config.visibility_tolerance);
  const auto unknown = state.class_set.unknown_index();

  struct Pending {
    std::uint32_t vertex;
    std::span<const double> likelihood;
  };
  std::vector<Pending> pending;
  pending.reserve(visible.size());
  FuseReport report;
  report.invisible = state.mesh.vertex_count() - visible.size();
  for (const auto& v : visible) {
    const auto px = score_map.pixel(static_cast<int>(std::floor(v.x)), static_cast<int>(std::floor(v.y)));
    if (!detail::all_finite(px)) {
      throw ContractError("fusion", "score map holds non-finite or negative probabilities");
    }
    if (v.depth < state.config.near_skip_distance && argmax_class(px, unknown) == unknown) {
      ++report.skipped_near;
      report.skipped_near_vertices.push_back(v.index);
      continue;
    }
    pending.push_back({v.index, px});
  }
  // Validation is complete; nothing below can throw.
  for (const auto& p : pending) {
    detail::bayes_update_unchecked(state.mesh.distribution(p.vertex), p.likelihood,
                                   state.config.epsilon_floor);
  }
  report.updated = pending.size();
  ++state.frames_fused;
  return report;
}

inline std::vector<std::size_t> argmax_labels(const FusionState& state) {
  std::vector<std::size_t> labels(state.mesh.vertex_count());
  const auto unknown = state.class_set.unknown_index();
  for (std::size_t v = 0; v < labels.size(); ++v) {
    labels[v] = argmax_class(state.mesh.distribution(v), unknown);
  }
  return labels;
}

}  // namespace semfuse
