#pragma once

// Software z-buffer renderer and the depth-consistency visibility test.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "semfuse/error.hpp"
#include "semfuse/geometry.hpp"
#include "semfuse/io.hpp"

namespace semfuse {

// Triangles are clipped against this viewing-axis depth before projection.
inline constexpr double kNearClip = 0.05;
inline constexpr double kDefaultVisibilityTolerance = 0.01;

struct DepthMap {
  static constexpr double kNoSurface = std::numeric_limits<double>::infinity();

  int width = 0;
  int height = 0;
  std::vector<double> depth;  // row-major, viewing-axis depth in meters

  DepthMap() = default;
  DepthMap(int w, int h)
      : width(w), height(h), depth(static_cast<std::size_t>(w) * h, kNoSurface) {}

  double at(int x, int y) const { return depth[static_cast<std::size_t>(y) * width + x]; }
  bool has_surface(int x, int y) const { return at(x, y) != kNoSurface; }
  std::size_t covered_pixels() const {
    return static_cast<std::size_t>(
        std::count_if(depth.begin(), depth.end(), [](double d) { return d != kNoSurface; }));
  }
};

struct RenderResult {
  DepthMap depth;
  // Index of the triangle owning each pixel, -1 where nothing was drawn.
  std::vector<std::int32_t> triangle_ids;
};

namespace detail {

struct ScreenVertex {
  double x, y;
  double inv_w;    // 1 / clip w
  double depth_w;  // depth / clip w
};

// Sutherland-Hodgman against the plane depth = kNearClip. Returns the
// number of output vertices (0, 3 or 4).
inline int clip_near(const std::array<Vec3, 3>& in, std::array<Vec3, 4>& out) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const Vec3& a = in[i];
    const Vec3& b = in[(i + 1) % 3];
    const double da = -a.z() - kNearClip;
    const double db = -b.z() - kNearClip;
    if (da >= 0.0) out[n++] = a;
    if ((da >= 0.0) != (db >= 0.0)) {
      const double t = da / (da - db);
      out[n++] = a + t * (b - a);
    }
  }
  return n;
}

inline bool is_top_left(const ScreenVertex& a, const ScreenVertex& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

inline double edge(const ScreenVertex& a, const ScreenVertex& b, double px, double py) {
  return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

// Rasterizes one screen-space triangle into the z-buffer. Pixel centers are
// sampled; coverage follows the top-left fill rule.
inline void raster_triangle(ScreenVertex a, ScreenVertex b, ScreenVertex c, std::int32_t id,
                            DepthMap& dm, std::vector<std::int32_t>* ids) {
  double area = edge(a, b, c.x, c.y);
  if (area == 0.0 || !std::isfinite(area)) return;
  if (area < 0.0) {
    std::swap(b, c);
    area = -area;
  }
  const double min_x = std::min({a.x, b.x, c.x});
  const double max_x = std::max({a.x, b.x, c.x});
  const double min_y = std::min({a.y, b.y, c.y});
  const double max_y = std::max({a.y, b.y, c.y});
  auto first = [](double lo, int size) {
    return static_cast<int>(std::clamp(std::ceil(lo - 0.5), 0.0, static_cast<double>(size)));
  };
  auto last = [](double hi, int size) {
    return static_cast<int>(std::clamp(std::floor(hi - 0.5), -1.0, static_cast<double>(size - 1)));
  };
  const int x0 = first(min_x, dm.width), x1 = last(max_x, dm.width);
  const int y0 = first(min_y, dm.height), y1 = last(max_y, dm.height);
  if (x0 > x1 || y0 > y1) return;

  const bool tl_bc = is_top_left(b, c);
  const bool tl_ca = is_top_left(c, a);
  const bool tl_ab = is_top_left(a, b);
  const double inv_area = 1.0 / area;
  for (int y = y0; y <= y1; ++y) {
    const double py = y + 0.5;
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5;
      const double e0 = edge(b, c, px, py);
      const double e1 = edge(c, a, px, py);
      const double e2 = edge(a, b, px, py);
      if (e0 < 0.0 || e1 < 0.0 || e2 < 0.0) continue;
      if ((e0 == 0.0 && !tl_bc) || (e1 == 0.0 && !tl_ca) || (e2 == 0.0 && !tl_ab)) continue;
      const double l0 = e0 * inv_area, l1 = e1 * inv_area, l2 = e2 * inv_area;
      const double inv_w = l0 * a.inv_w + l1 * b.inv_w + l2 * c.inv_w;
      const double depth = (l0 * a.depth_w + l1 * b.depth_w + l2 * c.depth_w) / inv_w;
      const std::size_t idx = static_cast<std::size_t>(y) * dm.width + x;
      if (depth < dm.depth[idx]) {
        dm.depth[idx] = depth;
        if (ids) (*ids)[idx] = id;
      }
    }
  }
}

}  // namespace detail

// Renders per-pixel viewing-axis depth of the nearest surface. No backface
// culling; triangles crossing the near plane are clipped.
inline RenderResult render(const SemanticMesh& mesh, const CameraFrame& frame,
                           bool with_triangle_ids = false) {
  RenderResult out{DepthMap(frame.width(), frame.height()), {}};
  if (with_triangle_ids) {
    out.triangle_ids.assign(static_cast<std::size_t>(frame.width()) * frame.height(), -1);
  }
  auto* ids = with_triangle_ids ? &out.triangle_ids : nullptr;

  std::vector<Vec3> cam(mesh.vertices.size());
  const Eigen::Matrix3d rot = frame.world_to_camera().topLeftCorner<3, 3>();
  const Vec3 trans = frame.world_to_camera().topRightCorner<3, 1>();
  for (std::size_t i = 0; i < cam.size(); ++i) cam[i] = rot * mesh.vertices[i] + trans;

  const Mat4& proj = frame.projection();
  auto to_screen = [&](const Vec3& p, detail::ScreenVertex& s) {
    const Eigen::Vector4d clip = proj * p.homogeneous();
    if (!(clip.w() > 0.0)) return false;
    const auto [x, y] =
        ndc_to_pixel(clip.x() / clip.w(), clip.y() / clip.w(), frame.width(), frame.height());
    s = {x, y, 1.0 / clip.w(), -p.z() / clip.w()};
    return true;
  };

  std::array<Vec3, 4> poly;
  std::array<detail::ScreenVertex, 4> screen;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const std::array<Vec3, 3> v = {cam[tri[0]], cam[tri[1]], cam[tri[2]]};
    int n;
    if (-v[0].z() >= kNearClip && -v[1].z() >= kNearClip && -v[2].z() >= kNearClip) {
      std::copy(v.begin(), v.end(), poly.begin());
      n = 3;
    } else {
      n = detail::clip_near(v, poly);
    }
    if (n < 3) continue;
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) ok = to_screen(poly[i], screen[i]);
    if (!ok) continue;
    const auto id = static_cast<std::int32_t>(t);
    detail::raster_triangle(screen[0], screen[1], screen[2], id, out.depth, ids);
    if (n == 4) detail::raster_triangle(screen[0], screen[2], screen[3], id, out.depth, ids);
  }
  return out;
}

inline DepthMap render_depth(const SemanticMesh& mesh, const CameraFrame& frame) {
  return render(mesh, frame).depth;
}

struct VisibleVertex {
  std::uint32_t index;
  double x, y;   // continuous pixel coordinates
  double depth;  // viewing-axis depth of the vertex
};

// Vertices that project into the image onto a rendered surface whose depth
// agrees with the vertex depth within `tolerance`.
inline std::vector<VisibleVertex> visible_vertices(
    const SemanticMesh& mesh, const CameraFrame& frame, const DepthMap& depth_map,
    double tolerance = kDefaultVisibilityTolerance) {
  if (depth_map.width != frame.width() || depth_map.height != frame.height()) {
    throw ContractError("rasterizer", "depth map dimensions do not match the camera frame");
  }
  std::vector<VisibleVertex> out;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const auto proj = project_to_pixel(mesh.vertices[i], frame);
    if (!proj) continue;
    const double fx = std::floor(proj->x);
    const double fy = std::floor(proj->y);
    if (fx < 0.0 || fy < 0.0 || fx >= frame.width() || fy >= frame.height()) continue;
    const double surface = depth_map.at(static_cast<int>(fx), static_cast<int>(fy));
    if (surface == DepthMap::kNoSurface) continue;
    if (std::abs(proj->depth - surface) <= tolerance) {
      out.push_back({static_cast<std::uint32_t>(i), proj->x, proj->y, proj->depth});
    }
  }
  return out;
}

// 16-bit PGM in millimeters, clamped; uncovered pixels are written as 0.
inline void write_depth_pgm(const std::string& path, const DepthMap& dm) {
  io::GrayImage img;
  img.width = dm.width;
  img.height = dm.height;
  img.max_value = 65535;
  img.pixels.resize(dm.depth.size());
  for (std::size_t i = 0; i < dm.depth.size(); ++i) {
    const double d = dm.depth[i];
    img.pixels[i] = d == DepthMap::kNoSurface
                        ? 0
                        : static_cast<std::uint16_t>(std::clamp(std::lround(d * 1000.0), 0L, 65535L));
  }
  io::write_pgm(path, img);
}

}  // namespace semfuse
