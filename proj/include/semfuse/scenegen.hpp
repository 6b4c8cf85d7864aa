#pragma once

// Deterministic synthetic indoor scenes with exact per-vertex ground truth,
// and camera trajectories through them.
//
// The triangle budget is `density * room volume`, spread uniformly over the
// total surface area, so a 4x4x4 m room at 800 tri/m^3 yields ~51k
// triangles. Chairs are the boundary surface of a union of boxes (seat, back,
// four legs) on a rectilinear lattice, which makes each chair one
// vertex-connected surface. Lamps are surfaces of revolution: a cylinder
// topped by a cone of 0.22 m diameter and height.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "semfuse/error.hpp"
#include "semfuse/geometry.hpp"
#include "semfuse/segmentation.hpp"

namespace semfuse {

enum class Shape { kChair, kLamp };

struct SceneObject {
  Shape shape;
  Vec3 position;      // floor contact point (center of the footprint)
  double yaw = 0.0;   // rotation about +Y, radians
};

struct SceneSpec {
  Vec3 room_extent{4.0, 4.0, 4.0};  // x, y (height), z; floor at y = 0, centered on x/z
  std::vector<SceneObject> objects;
  double density = 800.0;  // triangles per cubic meter of room volume
  std::uint64_t seed = 0;
};

struct SceneObjectInfo {
  std::size_t class_index;
  Vec3 centroid;
  std::uint32_t first_vertex;
  std::uint32_t vertex_count;
  std::uint32_t first_triangle;
  std::uint32_t triangle_count;
};

struct Scene {
  SemanticMesh mesh;  // labels hold ground truth
  ClassSet classes;
  std::vector<SceneObjectInfo> objects;
  double grid_spacing = 0.0;  // lattice spacing used for flat surfaces
  double area_density = 0.0;  // target triangles per square meter
};

namespace detail {

inline constexpr double kChairFootprint = 0.44;
inline constexpr double kLampShadeRadius = 0.11;

struct Box {
  Vec3 lo, hi;
};

inline std::vector<Box> chair_boxes() {
  const double h = kChairFootprint / 2;
  const double leg = 0.04, seat_y = 0.42, seat_t = 0.05, back_top = 0.90, back_t = 0.04;
  std::vector<Box> boxes = {
      {{-h, seat_y, -h}, {h, seat_y + seat_t, h}},                  // seat
      {{-h, seat_y + seat_t, -h}, {h, back_top, -h + back_t}},      // back
  };
  for (double sx : {-1.0, 1.0}) {
    for (double sz : {-1.0, 1.0}) {
      const double x0 = sx < 0 ? -h : h - leg;
      const double z0 = sz < 0 ? -h : h - leg;
      boxes.push_back({{x0, 0.0, z0}, {x0 + leg, seat_y, z0 + leg}});
    }
  }
  return boxes;
}

// (r, y) profile of the lamp, revolved about the local Y axis: a cylinder
// body with a cone shade of the same radius on top, so no part of the lamp
// overhangs another.
inline std::vector<std::array<double, 2>> lamp_profile() {
  return {{0.0, 0.0}, {kLampShadeRadius, 0.0}, {kLampShadeRadius, 0.28}, {0.0, 0.50}};
}

inline double chair_area() {
  // Surface of the box union; computed from the pieces (exposed faces only).
  const double h = kChairFootprint, leg = 0.04;
  const double seat = 2 * h * h + 4 * h * 0.05 - 4 * leg * leg - h * 0.04;
  const double back = 2 * h * (0.90 - 0.47) + 2 * 0.04 * (0.90 - 0.47) + h * 0.04;
  const double legs = 4 * (4 * leg * 0.42 + leg * leg);
  return seat + back + legs;
}

inline double lamp_area() {
  const auto prof = lamp_profile();
  double a = 0.0;
  for (std::size_t i = 1; i < prof.size(); ++i) {
    const double r0 = prof[i - 1][0], r1 = prof[i][0];
    const double len = std::hypot(r1 - r0, prof[i][1] - prof[i - 1][1]);
    a += M_PI * (r0 + r1) * len;
  }
  return a;
}

inline std::vector<double> subdivide(const std::vector<double>& breaks, double spacing,
                                     int min_cells = 1) {
  std::vector<double> out{breaks.front()};
  for (std::size_t i = 1; i < breaks.size(); ++i) {
    const double a = breaks[i - 1], b = breaks[i];
    const int n = std::max(min_cells, static_cast<int>(std::lround((b - a) / spacing)));
    for (int k = 1; k <= n; ++k) out.push_back(k == n ? b : a + (b - a) * k / n);
  }
  return out;
}

class MeshBuilder {
 public:
  MeshBuilder(SemanticMesh& mesh, std::uint8_t label) : mesh_(mesh), label_(label) {}

  std::uint32_t add_vertex(const Vec3& p) {
    mesh_.vertices.push_back(p);
    mesh_.labels.push_back(label_);
    return static_cast<std::uint32_t>(mesh_.vertices.size() - 1);
  }
  void add_triangle(std::uint32_t a, std::uint32_t b, std::uint32_t c) { mesh_.triangles.push_back({a, b, c}); }
  void add_quad(std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d) {
    add_triangle(a, b, c);
    add_triangle(a, c, d);
  }

 private:
  SemanticMesh& mesh_;
  std::uint8_t label_;
};

// Grid-triangulated rectangle `origin + s*u + t*v`, s,t in [0,1].
inline void add_rectangle(MeshBuilder& b, const Vec3& origin, const Vec3& u, const Vec3& v,
                          double spacing) {
  const int nu = std::max(1, static_cast<int>(std::lround(u.norm() / spacing)));
  const int nv = std::max(1, static_cast<int>(std::lround(v.norm() / spacing)));
  std::vector<std::uint32_t> idx;
  idx.reserve(static_cast<std::size_t>(nu + 1) * (nv + 1));
  for (int j = 0; j <= nv; ++j) {
    for (int i = 0; i <= nu; ++i) {
      idx.push_back(b.add_vertex(origin + u * (static_cast<double>(i) / nu) + v * (static_cast<double>(j) / nv)));
    }
  }
  for (int j = 0; j < nv; ++j) {
    for (int i = 0; i < nu; ++i) {
      const auto a = idx[j * (nu + 1) + i];
      b.add_quad(a, a + 1, idx[(j + 1) * (nu + 1) + i + 1], idx[(j + 1) * (nu + 1) + i]);
    }
  }
}

inline Vec3 place(const Vec3& local, const SceneObject& o) {
  const double c = std::cos(o.yaw), s = std::sin(o.yaw);
  return o.position + Vec3(c * local.x() + s * local.z(), local.y(), -s * local.x() + c * local.z());
}

inline void add_chair(MeshBuilder& b, const SceneObject& o, double spacing) {
  const auto boxes = chair_boxes();
  std::array<std::vector<double>, 3> breaks;
  for (const auto& bx : boxes) {
    for (int a = 0; a < 3; ++a) {
      breaks[a].push_back(bx.lo[a]);
      breaks[a].push_back(bx.hi[a]);
    }
  }
  std::array<std::vector<double>, 3> grid;
  for (int a = 0; a < 3; ++a) {
    std::sort(breaks[a].begin(), breaks[a].end());
    breaks[a].erase(std::unique(breaks[a].begin(), breaks[a].end(),
                                [](double x, double y) { return std::abs(x - y) < 1e-12; }),
                    breaks[a].end());
    // Two cells minimum so thin parts (legs, back) have face-interior vertices.
    grid[a] = subdivide(breaks[a], spacing, 2);
  }
  const int nx = static_cast<int>(grid[0].size()) - 1;
  const int ny = static_cast<int>(grid[1].size()) - 1;
  const int nz = static_cast<int>(grid[2].size()) - 1;
  auto occupied = [&](int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0 || i >= nx || j >= ny || k >= nz) return false;
    const Vec3 c((grid[0][i] + grid[0][i + 1]) / 2, (grid[1][j] + grid[1][j + 1]) / 2,
                 (grid[2][k] + grid[2][k + 1]) / 2);
    for (const auto& bx : boxes) {
      if ((c.array() > bx.lo.array()).all() && (c.array() < bx.hi.array()).all()) return true;
    }
    return false;
  };
  std::map<std::tuple<int, int, int>, std::uint32_t> lattice;
  auto vertex = [&](int i, int j, int k) {
    auto [it, fresh] = lattice.try_emplace({i, j, k}, 0);
    if (fresh) it->second = b.add_vertex(place(Vec3(grid[0][i], grid[1][j], grid[2][k]), o));
    return it->second;
  };
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      for (int k = 0; k < nz; ++k) {
        if (!occupied(i, j, k)) continue;
        if (!occupied(i - 1, j, k)) b.add_quad(vertex(i, j, k), vertex(i, j, k + 1), vertex(i, j + 1, k + 1), vertex(i, j + 1, k));
        if (!occupied(i + 1, j, k)) b.add_quad(vertex(i + 1, j, k), vertex(i + 1, j + 1, k), vertex(i + 1, j + 1, k + 1), vertex(i + 1, j, k + 1));
        if (!occupied(i, j - 1, k)) b.add_quad(vertex(i, j, k), vertex(i + 1, j, k), vertex(i + 1, j, k + 1), vertex(i, j, k + 1));
        if (!occupied(i, j + 1, k)) b.add_quad(vertex(i, j + 1, k), vertex(i, j + 1, k + 1), vertex(i + 1, j + 1, k + 1), vertex(i + 1, j + 1, k));
        if (!occupied(i, j, k - 1)) b.add_quad(vertex(i, j, k), vertex(i, j + 1, k), vertex(i + 1, j + 1, k), vertex(i + 1, j, k));
        if (!occupied(i, j, k + 1)) b.add_quad(vertex(i, j, k + 1), vertex(i + 1, j, k + 1), vertex(i + 1, j + 1, k + 1), vertex(i, j + 1, k + 1));
      }
    }
  }
}

inline void add_lamp(MeshBuilder& b, const SceneObject& o, double spacing) {
  const auto prof = lamp_profile();
  const int segments = std::max(8, static_cast<int>(std::lround(2 * M_PI * kLampShadeRadius / spacing)));
  // Subdivide the profile so every ring step is at most ~spacing long.
  std::vector<std::array<double, 2>> pts{prof.front()};
  for (std::size_t i = 1; i < prof.size(); ++i) {
    const auto& p0 = prof[i - 1];
    const auto& p1 = prof[i];
    const double len = std::hypot(p1[0] - p0[0], p1[1] - p0[1]);
    const int n = std::max(1, static_cast<int>(std::lround(len / spacing)));
    for (int k = 1; k <= n; ++k) {
      const double t = static_cast<double>(k) / n;
      pts.push_back({p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])});
    }
  }
  std::vector<std::vector<std::uint32_t>> rings;
  for (const auto& p : pts) {
    std::vector<std::uint32_t> ring;
    if (p[0] == 0.0) {
      ring.push_back(b.add_vertex(place(Vec3(0, p[1], 0), o)));
    } else {
      for (int s = 0; s < segments; ++s) {
        const double a = 2 * M_PI * s / segments;
        ring.push_back(b.add_vertex(place(Vec3(p[0] * std::cos(a), p[1], p[0] * std::sin(a)), o)));
      }
    }
    rings.push_back(std::move(ring));
  }
  for (std::size_t r = 1; r < rings.size(); ++r) {
    const auto& lo = rings[r - 1];
    const auto& hi = rings[r];
    for (int s = 0; s < segments; ++s) {
      const int s1 = (s + 1) % segments;
      if (lo.size() == 1 && hi.size() == 1) continue;
      if (lo.size() == 1) b.add_triangle(lo[0], hi[s1], hi[s]);
      else if (hi.size() == 1) b.add_triangle(lo[s], lo[s1], hi[0]);
      else b.add_quad(lo[s], lo[s1], hi[s1], hi[s]);
    }
  }
}

inline double footprint_radius(Shape s) {
  return s == Shape::kChair ? kChairFootprint / std::sqrt(2.0) : kLampShadeRadius;
}

}  // namespace detail

inline Scene generate_scene(const SceneSpec& spec) {
  if (!(spec.density > 0.0)) throw ParameterError("scenegen", "density must be positive");
  if ((spec.room_extent.array() <= 0.0).any()) throw ParameterError("scenegen", "room extent must be positive");
  const Vec3 half(spec.room_extent.x() / 2, 0.0, spec.room_extent.z() / 2);
  for (const auto& o : spec.objects) {
    const double r = detail::footprint_radius(o.shape);
    if (std::abs(o.position.x()) + r > half.x() || std::abs(o.position.z()) + r > half.z() ||
        o.position.y() < 0.0 || o.position.y() + 0.9 > spec.room_extent.y()) {
      throw ParameterError("scenegen", "object lies outside the room");
    }
  }

  Scene scene;
  const auto& ex = spec.room_extent;
  const double room_area = 2 * (ex.x() * ex.y() + ex.x() * ex.z() + ex.y() * ex.z());
  double area = room_area;
  for (const auto& o : spec.objects) area += o.shape == Shape::kChair ? detail::chair_area() : detail::lamp_area();
  const double budget = spec.density * ex.x() * ex.y() * ex.z();
  scene.area_density = budget / area;
  scene.grid_spacing = std::sqrt(2.0 / scene.area_density);
  const double s = scene.grid_spacing;

  const auto unknown = static_cast<std::uint8_t>(scene.classes.unknown_index());
  {
    detail::MeshBuilder b(scene.mesh, unknown);
    const Vec3 lo(-half.x(), 0.0, -half.z());
    const Vec3 X(ex.x(), 0, 0), Y(0, ex.y(), 0), Z(0, 0, ex.z());
    detail::add_rectangle(b, lo, X, Z, s);      // floor
    detail::add_rectangle(b, lo + Y, X, Z, s);  // ceiling
    detail::add_rectangle(b, lo, X, Y, s);      // wall z = -half
    detail::add_rectangle(b, lo + Z, X, Y, s);  // wall z = +half
    detail::add_rectangle(b, lo, Z, Y, s);      // wall x = -half
    detail::add_rectangle(b, lo + X, Z, Y, s);  // wall x = +half
  }
  for (const auto& o : spec.objects) {
    const auto cls = *scene.classes.index_of(o.shape == Shape::kChair ? "Chair" : "Lamp");
    SceneObjectInfo info{cls, Vec3::Zero(), static_cast<std::uint32_t>(scene.mesh.vertices.size()), 0,
                         static_cast<std::uint32_t>(scene.mesh.triangles.size()), 0};
    detail::MeshBuilder b(scene.mesh, static_cast<std::uint8_t>(cls));
    if (o.shape == Shape::kChair) detail::add_chair(b, o, s);
    else detail::add_lamp(b, o, s);
    info.vertex_count = static_cast<std::uint32_t>(scene.mesh.vertices.size()) - info.first_vertex;
    info.triangle_count = static_cast<std::uint32_t>(scene.mesh.triangles.size()) - info.first_triangle;
    for (std::uint32_t v = 0; v < info.vertex_count; ++v) info.centroid += scene.mesh.vertices[info.first_vertex + v];
    info.centroid /= static_cast<double>(info.vertex_count);
    scene.objects.push_back(info);
  }
  scene.mesh.validate();
  return scene;
}

// Places `chairs` chairs and `lamps` lamps at random non-overlapping spots
// within `placement_radius` of the room center (rejection sampling).
inline SceneSpec default_scene_spec(std::uint64_t seed, int chairs = 2, int lamps = 1,
                                    double placement_radius = 0.55) {
  SceneSpec spec;
  spec.seed = seed;
  std::mt19937_64 rng(detail::splitmix64(seed ^ 0x5ce7e5ce7eULL));
  auto uniform = [&rng](double lo, double hi) { return lo + (hi - lo) * detail::unit_double(rng); };
  std::vector<Shape> shapes(static_cast<std::size_t>(chairs), Shape::kChair);
  shapes.insert(shapes.end(), static_cast<std::size_t>(lamps), Shape::kLamp);
  // Greedy placement with restarts; a restart clears every object placed so far.
  for (int restart = 0; restart < 1000; ++restart) {
    spec.objects.clear();
    for (auto shape : shapes) {
      const double r = detail::footprint_radius(shape);
      for (int attempt = 0; attempt < 200; ++attempt) {
        const double a = uniform(0, 2 * M_PI);
        const double d = placement_radius * std::sqrt(uniform(0, 1));
        const Vec3 p(d * std::cos(a), 0.0, d * std::sin(a));
        bool clear = true;
        for (const auto& o : spec.objects) {
          clear &= (o.position - p).norm() > r + detail::footprint_radius(o.shape) + 0.05;
        }
        if (!clear) continue;
        spec.objects.push_back({shape, p, uniform(0, 2 * M_PI)});
        break;
      }
    }
    if (spec.objects.size() == shapes.size()) return spec;
  }
  throw ParameterError("scenegen", "cannot place all objects without overlap");
}

enum class TrajectoryStyle { kOrbit, kWaypoints };

struct CameraIntrinsics {
  int width = 896;
  int height = 504;
  double fov_y = 40.0 * M_PI / 180.0;
  double near_plane = 0.05;
  double far_plane = 20.0;

  Mat4 projection() const {
    return make_perspective(fov_y, static_cast<double>(width) / height, near_plane, far_plane);
  }
};

struct TrajectoryOptions {
  TrajectoryStyle style = TrajectoryStyle::kOrbit;
  int n_frames = 24;
  double radius = 1.15;        // orbit radius around the scene centroid
  double eye_height = 1.75;
  double target_height = 0.4;
  double height_jitter = 0.0;  // uniform +/- jitter on eye height, seeded
  double min_range = 0.85;
  std::vector<Mat4> waypoints;  // camera_to_world poses for kWaypoints
  CameraIntrinsics camera;
};

struct Trajectory {
  std::vector<CameraFrame> frames;
  double min_range = 0.85;
  std::vector<std::string> warnings;

  std::vector<Mat4> poses() const {
    std::vector<Mat4> out;
    for (const auto& f : frames) out.push_back(f.camera_to_world());
    return out;
  }
};

inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Ericson, Real-Time Collision Detection, 5.1.5.
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + d1 / (d1 - d3) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + d2 / (d2 - d6) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) return b + (d4 - d3) / ((d4 - d3) + (d5 - d6)) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

inline Vec3 closest_surface_point(const SemanticMesh& mesh, const Vec3& p) {
  Vec3 best = p;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& t : mesh.triangles) {
    const Vec3 q = closest_point_on_triangle(p, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
    const double d = (q - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  return best;
}

inline Vec3 scene_centroid(const Scene& scene) {
  if (scene.objects.empty()) return Vec3::Zero();
  Vec3 c = Vec3::Zero();
  for (const auto& o : scene.objects) c += o.centroid;
  c /= static_cast<double>(scene.objects.size());
  return {c.x(), 0.0, c.z()};
}

inline Trajectory generate_trajectory(const Scene& scene, const TrajectoryOptions& opt,
                                      std::uint64_t seed) {
  if (opt.n_frames < 1) throw ParameterError("scenegen", "trajectory needs at least one frame");
  Trajectory traj;
  traj.min_range = opt.min_range;
  const Mat4 proj = opt.camera.projection();
  std::mt19937_64 rng(detail::splitmix64(seed ^ 0x7a11ec7041ULL));

  std::vector<Mat4> poses;
  if (opt.style == TrajectoryStyle::kOrbit) {
    const Vec3 center = scene_centroid(scene);
    const Vec3 target = center + Vec3(0, opt.target_height, 0);
    for (int k = 0; k < opt.n_frames; ++k) {
      const double a = 2 * M_PI * k / opt.n_frames;
      const double jitter = opt.height_jitter * (2 * detail::unit_double(rng) - 1);
      Vec3 eye = center + Vec3(opt.radius * std::cos(a), opt.eye_height + jitter, opt.radius * std::sin(a));
      // Keep the minimum range: push the eye away from the closest surface.
      for (int it = 0; it < 20 && !scene.mesh.triangles.empty(); ++it) {
        const Vec3 q = closest_surface_point(scene.mesh, eye);
        const double d = (eye - q).norm();
        if (d >= opt.min_range - 1e-9) break;
        if (it == 0) {
          traj.warnings.push_back("pose " + std::to_string(k) + " is " + std::to_string(d) +
                                  " m from the scene; pushed out to the minimum range");
        }
        const Vec3 away = d > 1e-9 ? (eye - q) / d : (target - eye).normalized();
        eye = q + away * (opt.min_range + 1e-6);
      }
      poses.push_back(look_at(eye, target));
    }
  } else {
    if (opt.waypoints.empty()) throw ParameterError("scenegen", "waypoint trajectory needs waypoints");
    const auto& wp = opt.waypoints;
    for (int k = 0; k < opt.n_frames; ++k) {
      Mat4 m = wp.front();
      if (wp.size() > 1 && opt.n_frames > 1) {
        const double s = static_cast<double>(k) * (wp.size() - 1) / (opt.n_frames - 1);
        const auto i = std::min(static_cast<std::size_t>(s), wp.size() - 2);
        const double t = s - static_cast<double>(i);
        const Eigen::Quaterniond q0(Eigen::Matrix3d(wp[i].topLeftCorner<3, 3>()));
        const Eigen::Quaterniond q1(Eigen::Matrix3d(wp[i + 1].topLeftCorner<3, 3>()));
        m.topLeftCorner<3, 3>() = q0.slerp(t, q1).normalized().toRotationMatrix();
        m.topRightCorner<3, 1>() = (1 - t) * wp[i].topRightCorner<3, 1>() + t * wp[i + 1].topRightCorner<3, 1>();
      }
      poses.push_back(m);
      const Vec3 eye = m.topRightCorner<3, 1>();
      if (!scene.mesh.triangles.empty() &&
          (closest_surface_point(scene.mesh, eye) - eye).norm() < opt.min_range) {
        traj.warnings.push_back("pose " + std::to_string(k) + " is closer than the minimum range");
      }
    }
  }
  for (std::size_t k = 0; k < poses.size(); ++k) {
    traj.frames.emplace_back(opt.camera.width, opt.camera.height, poses[k], proj, k);
  }
  return traj;
}

}  // namespace semfuse
