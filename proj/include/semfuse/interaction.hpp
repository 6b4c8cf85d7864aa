#pragma once

// Gaze-ray selection of labeled components and the lamp actuator.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "semfuse/components.hpp"
#include "semfuse/geometry.hpp"

namespace semfuse {

struct GazeRay {
  Vec3 origin;
  Vec3 direction;  // unit length

  GazeRay(const Vec3& o, const Vec3& d) : origin(o), direction(d) {
    if (std::abs(d.norm() - 1.0) > 1e-9) throw ContractError("interaction", "gaze direction is not unit length");
  }

  static GazeRay towards(const Vec3& from, const Vec3& to) { return {from, (to - from).normalized()}; }
};

struct RayHit {
  std::uint32_t component_id;
  std::string class_name;
  Vec3 point;
  double distance;
};

inline constexpr double kRayDeterminantEpsilon = 1e-9;

// Watertight ray/triangle test (Woop, Benthin and Wald), double-sided.
// Returns the positive hit distance along the ray.
inline std::optional<double> intersect_triangle(const GazeRay& ray, const Vec3& v0, const Vec3& v1,
                                                const Vec3& v2) {
  const Vec3& d = ray.direction;
  int kz = 0;
  d.cwiseAbs().maxCoeff(&kz);
  int kx = (kz + 1) % 3;
  int ky = (kx + 1) % 3;
  if (d[kz] < 0.0) std::swap(kx, ky);
  const double sx = d[kx] / d[kz];
  const double sy = d[ky] / d[kz];
  const double sz = 1.0 / d[kz];

  const Vec3 a = v0 - ray.origin;
  const Vec3 b = v1 - ray.origin;
  const Vec3 c = v2 - ray.origin;
  const double ax = a[kx] - sx * a[kz], ay = a[ky] - sy * a[kz];
  const double bx = b[kx] - sx * b[kz], by = b[ky] - sy * b[kz];
  const double cx = c[kx] - sx * c[kz], cy = c[ky] - sy * c[kz];

  const double u = cx * by - cy * bx;
  const double v = ax * cy - ay * cx;
  const double w = bx * ay - by * ax;
  if ((u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0)) return std::nullopt;
  const double det = u + v + w;
  if (std::abs(det) < kRayDeterminantEpsilon) return std::nullopt;
  const double t = (u * sz * a[kz] + v * sz * b[kz] + w * sz * c[kz]) / det;
  if (!(t > 0.0)) return std::nullopt;
  return t;
}

// Nearest hit over every triangle of every component. Ties keep the first
// component in list order.
inline std::optional<RayHit> raycast(const GazeRay& ray,
                                     const std::vector<LabeledComponent>& components) {
  std::optional<RayHit> best;
  for (const auto& c : components) {
    for (const auto& t : c.triangles) {
      const auto dist = intersect_triangle(ray, c.vertices[t[0]], c.vertices[t[1]], c.vertices[t[2]]);
      if (dist && (!best || *dist < best->distance)) {
        best = RayHit{c.component_id, c.class_name, ray.origin + *dist * ray.direction, *dist};
      }
    }
  }
  return best;
}

struct SelectionEvent {
  Vec3 point;  // world coordinates of the raycast endpoint
  std::string class_name;
};

struct ActuatorState {
  bool lamp_on = false;
  std::size_t toggle_count = 0;
  std::optional<SelectionEvent> last_selection;
};

struct ActionReport {
  std::string class_name;
  Vec3 point;
  bool selected = true;  // render hint for the client (selected hologram)
  bool toggled = false;
  bool lamp_on = false;
};

// Optional external actuation: runs `command on|off` through the shell.
struct ActuationHook {
  std::string command;  // empty disables the hook

  void operator()(bool lamp_on) const {
    if (command.empty()) return;
    const std::string cmd = command + (lamp_on ? " on" : " off");
    [[maybe_unused]] const int rc = std::system(cmd.c_str());
  }
};

inline ActionReport handle_selection(const SelectionEvent& selection, ActuatorState& state,
                                     const ActuationHook& hook = {}) {
  ActionReport report{selection.class_name, selection.point, true, false, state.lamp_on};
  state.last_selection = selection;
  if (detail::iequals(selection.class_name, "Lamp")) {
    state.lamp_on = !state.lamp_on;
    ++state.toggle_count;
    report.toggled = true;
    report.lamp_on = state.lamp_on;
    hook(state.lamp_on);
  }
  return report;
}

inline ActionReport handle_selection(const RayHit& hit, ActuatorState& state,
                                     const ActuationHook& hook = {}) {
  return handle_selection(SelectionEvent{hit.point, hit.class_name}, state, hook);
}

// Single-line record: timestamp class x y z lamp=on|off
inline std::string format_action(const ActionReport& r, const std::string& timestamp) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << timestamp << ' ' << r.class_name << ' ' << r.point.x() << ' ' << r.point.y()
     << ' ' << r.point.z() << " lamp=" << (r.lamp_on ? "on" : "off");
  return os.str();
}

}  // namespace semfuse
