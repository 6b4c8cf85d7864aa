#pragma once

// Object extraction: Unknown vertices are dropped, the remaining
// same-labeled triangles are grouped into vertex-connected components, and
// components are filtered by per-class minimum triangle counts.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "semfuse/error.hpp"
#include "semfuse/geometry.hpp"
#include "semfuse/ply.hpp"

namespace semfuse {

struct LabeledComponent {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;  // indices into `vertices`
  std::size_t class_index = 0;
  std::string class_name;
  std::size_t triangle_count = 0;
  std::uint32_t component_id = 0;
  // Original mesh index of every component vertex (sorted ascending).
  std::vector<std::uint32_t> source_vertices;
};

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // The smaller root becomes the representative.
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent_[b] = a;
    else parent_[a] = b;
  }

 private:
  std::vector<std::uint32_t> parent_;
};

}  // namespace detail

// Components ordered by their smallest original vertex index; ids follow
// that order starting at 0.
inline std::vector<LabeledComponent> extract_components(const SemanticMesh& mesh,
                                                        const std::vector<std::size_t>& labels,
                                                        const ClassSet& classes) {
  if (labels.size() != mesh.vertex_count()) {
    throw ContractError("components", "label count does not match vertex count");
  }
  const auto unknown = classes.unknown_index();
  std::vector<std::uint32_t> kept;
  for (std::uint32_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto l = labels[tri[0]];
    if (l != unknown && l == labels[tri[1]] && l == labels[tri[2]]) kept.push_back(t);
  }

  detail::UnionFind uf(mesh.vertex_count());
  for (auto t : kept) {
    const auto& tri = mesh.triangles[t];
    uf.unite(tri[0], tri[1]);
    uf.unite(tri[0], tri[2]);
  }

  // The union-find root is the smallest vertex index of its component, so a
  // map keyed by root yields the required ordering.
  std::map<std::uint32_t, std::vector<std::uint32_t>> by_root;
  for (auto t : kept) by_root[uf.find(mesh.triangles[t][0])].push_back(t);

  std::vector<LabeledComponent> out;
  out.reserve(by_root.size());
  std::vector<std::int64_t> remap(mesh.vertex_count(), -1);
  for (auto& [root, tris] : by_root) {
    LabeledComponent c;
    c.class_index = labels[root];
    c.class_name = classes.name(c.class_index);
    c.component_id = static_cast<std::uint32_t>(out.size());
    for (auto t : tris) {
      for (auto v : mesh.triangles[t]) c.source_vertices.push_back(v);
    }
    std::sort(c.source_vertices.begin(), c.source_vertices.end());
    c.source_vertices.erase(std::unique(c.source_vertices.begin(), c.source_vertices.end()),
                            c.source_vertices.end());
    c.vertices.reserve(c.source_vertices.size());
    for (std::size_t i = 0; i < c.source_vertices.size(); ++i) {
      remap[c.source_vertices[i]] = static_cast<std::int64_t>(i);
      c.vertices.push_back(mesh.vertices[c.source_vertices[i]]);
    }
    c.triangles.reserve(tris.size());
    for (auto t : tris) {
      const auto& tri = mesh.triangles[t];
      c.triangles.push_back({static_cast<std::uint32_t>(remap[tri[0]]),
                             static_cast<std::uint32_t>(remap[tri[1]]),
                             static_cast<std::uint32_t>(remap[tri[2]])});
    }
    c.triangle_count = c.triangles.size();
    out.push_back(std::move(c));
  }
  return out;
}

// Minimum triangle counts per class name (case-insensitive); a component is
// kept when its triangle count is strictly greater than its class threshold.
class ThresholdTable {
 public:
  ThresholdTable() = default;
  ThresholdTable(std::initializer_list<std::pair<const std::string, std::size_t>> init) {
    for (const auto& [k, v] : init) set(k, v);
  }

  static ThresholdTable defaults() { return {{"Chair", 30}, {"Lamp", 5}}; }

  void set(const std::string& name, std::size_t min_triangles) { table_[lower(name)] = min_triangles; }

  std::optional<std::size_t> get(const std::string& name) const {
    auto it = table_.find(lower(name));
    if (it == table_.end()) return std::nullopt;
    return it->second;
  }

  const std::map<std::string, std::size_t>& entries() const noexcept { return table_; }

 private:
  static std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  }

  std::map<std::string, std::size_t> table_;
};

inline std::vector<LabeledComponent> filter_components(std::vector<LabeledComponent> components,
                                                       const ThresholdTable& thresholds) {
  std::vector<LabeledComponent> out;
  for (auto& c : components) {
    const auto min = thresholds.get(c.class_name);
    if (!min) throw ConfigError("no triangle threshold configured for class '" + c.class_name + "'");
    if (c.triangle_count > *min) out.push_back(std::move(c));
  }
  return out;
}

inline bool batch_trigger(std::size_t frames_since_last_send, std::size_t batch_size = 5) {
  return frames_since_last_send >= batch_size;
}

inline SemanticMesh component_mesh(const LabeledComponent& c) {
  SemanticMesh m;
  m.vertices = c.vertices;
  m.triangles = c.triangles;
  return m;
}

inline std::string component_file_name(const LabeledComponent& c) {
  std::string cls = c.class_name;
  for (auto& ch : cls) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return "component_" + std::to_string(c.component_id) + "_" + cls + ".ply";
}

}  // namespace semfuse
