#pragma once

// Core mesh and camera types.
//
// Conventions used throughout the library:
//  * right-handed world frame, meters;
//  * cameras look down their local -Z axis, +Y is up, +X is right;
//  * the projection matrix maps camera space to clip space OpenGL style
//    (NDC in [-1,1]^3, near plane at NDC z = -1);
//  * pixel origin is the top-left corner, y grows downwards, and pixel (i, j)
//    covers the half-open square [i, i+1) x [j, j+1);
//  * 4x4 matrices are serialized row-major and applied to column vectors.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semfuse/error.hpp"

namespace semfuse {

using Vec3 = Eigen::Vector3d;
using Mat4 = Eigen::Matrix4d;
using Triangle = std::array<std::uint32_t, 3>;

namespace detail {

inline bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace detail

// Ordered set of semantic classes with one designated "Unknown" entry.
class ClassSet {
 public:
  static constexpr std::string_view kUnknownName = "Unknown";

  ClassSet() : ClassSet({"Lamp", "Chair", "Unknown"}) {}

  explicit ClassSet(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) throw ContractError("geometry", "class set is empty");
    std::optional<std::size_t> unknown;
    for (std::size_t i = 0; i < names_.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (detail::iequals(names_[i], names_[j])) {
          throw ContractError("geometry", "duplicate class name '" + names_[i] + "'");
        }
      }
      if (names_[i] == kUnknownName) unknown = i;
    }
    if (!unknown) throw ContractError("geometry", "class set has no 'Unknown' class");
    unknown_ = *unknown;
  }

  std::size_t size() const noexcept { return names_.size(); }
  std::size_t unknown_index() const noexcept { return unknown_; }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  // Case-insensitive lookup.
  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (detail::iequals(names_[i], name)) return i;
    }
    return std::nullopt;
  }

  bool operator==(const ClassSet&) const = default;

 private:
  std::vector<std::string> names_;
  std::size_t unknown_ = 0;
};

// Discrete probability distribution over a ClassSet.
class ClassDistribution {
 public:
  ClassDistribution() = default;
  explicit ClassDistribution(std::vector<double> p) : p_(std::move(p)) {}

  static ClassDistribution uniform(std::size_t n) {
    return ClassDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  double& operator[](std::size_t i) { return p_[i]; }
  std::span<const double> values() const noexcept { return p_; }
  std::span<double> values() noexcept { return p_; }

  double sum() const {
    double s = 0.0;
    for (double v : p_) s += v;
    return s;
  }

  bool operator==(const ClassDistribution&) const = default;

 private:
  std::vector<double> p_;
};

// Triangle mesh whose vertices carry class distributions (flat storage,
// `num_classes` doubles per vertex) and, optionally, a ground-truth label.
struct SemanticMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::size_t num_classes = 0;
  std::vector<double> probabilities;
  // Ground-truth class index per vertex; empty when the mesh is unlabeled.
  std::vector<std::uint8_t> labels;

  std::size_t vertex_count() const noexcept { return vertices.size(); }
  std::size_t triangle_count() const noexcept { return triangles.size(); }
  bool has_labels() const noexcept { return !labels.empty(); }
  bool has_distributions() const noexcept {
    return num_classes > 0 && probabilities.size() == vertices.size() * num_classes;
  }

  std::span<double> distribution(std::size_t v) {
    return {probabilities.data() + v * num_classes, num_classes};
  }
  std::span<const double> distribution(std::size_t v) const {
    return {probabilities.data() + v * num_classes, num_classes};
  }

  // Resets every vertex to the uniform distribution over `n` classes.
  void reset_distributions(std::size_t n) {
    num_classes = n;
    probabilities.assign(vertices.size() * n, 1.0 / static_cast<double>(n));
  }

  // Checks index bounds and array lengths, then drops triangles whose three
  // indices are identical. Returns the number of dropped triangles.
  std::size_t validate() {
    const auto n = vertices.size();
    for (const auto& t : triangles) {
      for (auto i : t) {
        if (i >= n) {
          throw ContractError("geometry", "triangle index " + std::to_string(i) +
                                              " out of range (" + std::to_string(n) +
                                              " vertices)");
        }
      }
    }
    if (num_classes > 0 && probabilities.size() != n * num_classes) {
      throw ContractError("geometry", "distribution array does not match vertex count");
    }
    if (!labels.empty() && labels.size() != n) {
      throw ContractError("geometry", "label array does not match vertex count");
    }
    const auto before = triangles.size();
    std::erase_if(triangles, [](const Triangle& t) { return t[0] == t[1] && t[1] == t[2]; });
    return before - triangles.size();
  }
};

// One capture: image size, rigid camera-to-world pose, projection matrix.
// Immutable; the world-to-camera transform is computed once on construction.
class CameraFrame {
 public:
  CameraFrame(int width, int height, const Mat4& camera_to_world, const Mat4& projection,
              std::uint64_t frame_index = 0)
      : width_(width),
        height_(height),
        camera_to_world_(camera_to_world),
        projection_(projection),
        frame_index_(frame_index) {
    if (width <= 0 || height <= 0) throw InvalidCamera("image dimensions must be positive");
    if (!camera_to_world.allFinite() || !projection.allFinite()) {
      throw InvalidCamera("camera matrices contain non-finite values");
    }
    const Eigen::Matrix3d r = camera_to_world.topLeftCorner<3, 3>();
    if (((r.transpose() * r) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6) {
      throw InvalidCamera("camera_to_world rotation is not orthonormal");
    }
    if (r.determinant() < 0.0) throw InvalidCamera("camera_to_world is not a proper rotation");
    const Eigen::RowVector4d bottom = camera_to_world.row(3);
    if ((bottom - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12) {
      throw InvalidCamera("camera_to_world is not a rigid transform");
    }
    world_to_camera_.setIdentity();
    world_to_camera_.topLeftCorner<3, 3>() = r.transpose();
    world_to_camera_.topRightCorner<3, 1>() = -r.transpose() * camera_to_world.topRightCorner<3, 1>();
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  const Mat4& camera_to_world() const noexcept { return camera_to_world_; }
  const Mat4& world_to_camera() const noexcept { return world_to_camera_; }
  const Mat4& projection() const noexcept { return projection_; }
  std::uint64_t frame_index() const noexcept { return frame_index_; }
  Vec3 position() const { return camera_to_world_.topRightCorner<3, 1>(); }

 private:
  int width_;
  int height_;
  Mat4 camera_to_world_;
  Mat4 projection_;
  Mat4 world_to_camera_;
  std::uint64_t frame_index_;
};

struct CameraPoint {
  Vec3 position;  // camera space
  double depth;   // distance along the viewing axis, -z
};

inline CameraPoint world_to_camera(const Vec3& point, const CameraFrame& frame) {
  const Vec3 p = frame.world_to_camera().topLeftCorner<3, 3>() * point +
                 frame.world_to_camera().topRightCorner<3, 1>();
  return {p, -p.z()};
}

struct PixelProjection {
  double x;  // continuous pixel coordinates
  double y;
  double depth;
};

// Maps an NDC coordinate to continuous pixel coordinates.
inline std::pair<double, double> ndc_to_pixel(double ndc_x, double ndc_y, int width, int height) {
  return {(ndc_x + 1.0) * 0.5 * width, (1.0 - ndc_y) * 0.5 * height};
}

// Projects a camera-space point; nullopt when it is not in front of the camera.
inline std::optional<PixelProjection> project_camera_point(const CameraPoint& cp,
                                                           const CameraFrame& frame) {
  if (!(cp.depth > 0.0)) return std::nullopt;
  const Eigen::Vector4d clip = frame.projection() * cp.position.homogeneous();
  if (!(clip.w() > 0.0)) return std::nullopt;
  const auto [x, y] = ndc_to_pixel(clip.x() / clip.w(), clip.y() / clip.w(), frame.width(),
                                   frame.height());
  return PixelProjection{x, y, cp.depth};
}

inline std::optional<PixelProjection> project_to_pixel(const Vec3& point,
                                                       const CameraFrame& frame) {
  return project_camera_point(world_to_camera(point, frame), frame);
}

// Standard perspective frustum (OpenGL clip conventions).
inline Mat4 make_perspective(double fov_y, double aspect, double near_plane, double far_plane) {
  if (!(fov_y > 0.0 && fov_y < M_PI)) throw ParameterError("geometry", "fov_y must lie in (0, pi)");
  if (!(aspect > 0.0)) throw ParameterError("geometry", "aspect must be positive");
  if (!(near_plane > 0.0 && far_plane > near_plane)) {
    throw ParameterError("geometry", "require 0 < near < far");
  }
  const double f = 1.0 / std::tan(fov_y / 2.0);
  Mat4 p = Mat4::Zero();
  p(0, 0) = f / aspect;
  p(1, 1) = f;
  p(2, 2) = (far_plane + near_plane) / (near_plane - far_plane);
  p(2, 3) = 2.0 * far_plane * near_plane / (near_plane - far_plane);
  p(3, 2) = -1.0;
  return p;
}

// Camera-to-world pose at `eye` looking towards `target`.
inline Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitY()) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-9) right = forward.cross(Vec3::UnitZ());
  right.normalize();
  const Vec3 cam_up = right.cross(forward);
  Mat4 m = Mat4::Identity();
  m.block<3, 1>(0, 0) = right;
  m.block<3, 1>(0, 1) = cam_up;
  m.block<3, 1>(0, 2) = -forward;
  m.block<3, 1>(0, 3) = eye;
  return m;
}

inline Mat4 translation(const Vec3& t) {
  Mat4 m = Mat4::Identity();
  m.topRightCorner<3, 1>() = t;
  return m;
}

}  // namespace semfuse
