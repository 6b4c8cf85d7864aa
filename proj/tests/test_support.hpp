#pragma once

// Shared helpers for the test suites: seeded random poses and meshes, and
// brute-force reference implementations that avoid the library code paths
// they are compared against.

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "semfuse/geometry.hpp"

namespace semfuse::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 random_vec(std::mt19937_64& rng, double lo, double hi) {
  return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

inline Mat4 random_pose(std::mt19937_64& rng, double max_translation = 5.0) {
  Eigen::Quaterniond q(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
  q.normalize();
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = q.toRotationMatrix();
  m.topRightCorner<3, 1>() = random_vec(rng, -max_translation, max_translation);
  return m;
}

inline std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t n, double lo = 0.01,
                                               double hi = 1.0) {
  std::vector<double> p(n);
  double s = 0;
  for (auto& v : p) s += (v = uniform(rng, lo, hi));
  for (auto& v : p) v /= s;
  return p;
}

// Triangles placed in camera space inside (or straddling) the view frustum,
// then moved to world space with the given pose.
inline SemanticMesh frustum_mesh(std::mt19937_64& rng, const Mat4& pose, int n, bool straddle_near) {
  SemanticMesh m;
  for (int t = 0; t < n; ++t) {
    const Vec3 center(uniform(rng, -2, 2), uniform(rng, -2, 2), -uniform(rng, 1.0, 6.0));
    for (int k = 0; k < 3; ++k) {
      Vec3 c = center + random_vec(rng, -1.2, 1.2);
      if (straddle_near && k == 0) c.z() = uniform(rng, -0.5, 0.2);
      m.vertices.push_back((pose * c.homogeneous()).head<3>());
    }
    const auto b = static_cast<std::uint32_t>(3 * t);
    m.triangles.push_back({b, b + 1, b + 2});
  }
  return m;
}

// Ray/triangle intersection by Moller-Trumbore; returns the ray parameter.
inline std::optional<double> moller_trumbore(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b,
                                             const Vec3& c) {
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 p = d.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-14) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = o - a;
  const double u = s.dot(p) * inv;
  if (u < 0 || u > 1) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = d.dot(q) * inv;
  if (v < 0 || u + v > 1) return std::nullopt;
  const double t = e2.dot(q) * inv;
  if (t <= 0) return std::nullopt;
  return t;
}

// Depth of the nearest surface through the center of pixel (x, y), found by
// casting a camera-space ray at every triangle. Hits closer than `near` are
// ignored, matching near-plane clipping.
inline double ray_cast_depth(const SemanticMesh& mesh, const Mat4& camera_to_world, const Mat4& projection,
                             int width, int height, int x, int y, double near = 0.05) {
  const double ndc_x = 2.0 * (x + 0.5) / width - 1.0;
  const double ndc_y = 1.0 - 2.0 * (y + 0.5) / height;
  const Vec3 dir(ndc_x / projection(0, 0), ndc_y / projection(1, 1), -1.0);
  const Mat4 w2c = camera_to_world.inverse();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : mesh.triangles) {
    Vec3 v[3];
    for (int k = 0; k < 3; ++k) v[k] = (w2c * mesh.vertices[t[k]].homogeneous()).head<3>();
    const auto hit = moller_trumbore(Vec3::Zero(), dir, v[0], v[1], v[2]);
    // dir has unit z component, so the ray parameter is the viewing depth.
    if (hit && *hit >= near && *hit < best) best = *hit;
  }
  return best;
}

// Pinhole projection written out from focal lengths.
inline std::optional<Eigen::Vector2d> pinhole_pixel(const Vec3& world, const Mat4& camera_to_world,
                                                    double fov_y, int width, int height) {
  const Vec3 c = (camera_to_world.inverse() * world.homogeneous()).head<3>();
  if (c.z() >= 0) return std::nullopt;
  const double f = 0.5 * height / std::tan(fov_y / 2);
  return Eigen::Vector2d(0.5 * width + f * c.x() / -c.z(), 0.5 * height - f * c.y() / -c.z());
}

}  // namespace semfuse::testing
