#include <gtest/gtest.h>

#include <set>

#include "semfuse/components.hpp"
#include "test_support.hpp"

namespace semfuse {
namespace {

constexpr std::size_t kLamp = 0, kChair = 1, kUnknown = 2;

// Appends a strip of `n` triangles labeled `label`; the strip is one
// connected component.
void add_strip(SemanticMesh& m, std::vector<std::size_t>& labels, std::size_t n, std::size_t label, double y) {
  const auto base = static_cast<std::uint32_t>(m.vertices.size());
  for (std::size_t i = 0; i < n + 2; ++i) {
    m.vertices.emplace_back(0.1 * static_cast<double>(i / 2), y + 0.1 * static_cast<double>(i % 2), 0.0);
    labels.push_back(label);
  }
  for (std::uint32_t i = 0; i < n; ++i) m.triangles.push_back({base + i, base + i + 1, base + i + 2});
}

std::vector<LabeledComponent> filtered(std::size_t chair_tris, std::size_t lamp_tris) {
  SemanticMesh m;
  std::vector<std::size_t> labels;
  add_strip(m, labels, chair_tris, kChair, 0.0);
  add_strip(m, labels, lamp_tris, kLamp, 5.0);
  return filter_components(extract_components(m, labels, ClassSet()), ThresholdTable::defaults());
}

TEST(ThresholdTest, ChairNeedsMoreThanThirty) {
  auto c = filtered(30, 100);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].class_name, "Lamp");
  c = filtered(31, 100);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].class_name, "Chair");
  EXPECT_EQ(c[0].triangle_count, 31u);
}

TEST(ThresholdTest, LampNeedsMoreThanFive) {
  auto c = filtered(100, 5);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].class_name, "Chair");
  c = filtered(100, 6);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[1].class_name, "Lamp");
  EXPECT_EQ(c[1].triangle_count, 6u);
}

TEST(ThresholdTest, LookupIgnoresCase) {
  ThresholdTable t = ThresholdTable::defaults();
  EXPECT_EQ(t.get("chair"), 30u);
  EXPECT_EQ(t.get("LAMP"), 5u);
  EXPECT_FALSE(t.get("table"));
  t.set("CHAIR", 12);
  EXPECT_EQ(t.get("Chair"), 12u);
  EXPECT_EQ(t.entries().size(), 2u);
}

TEST(ThresholdTest, MissingClassIsAConfigError) {
  SemanticMesh m;
  std::vector<std::size_t> labels;
  add_strip(m, labels, 10, kLamp, 0.0);
  ThresholdTable only_chair{{"Chair", 30}};
  EXPECT_THROW(filter_components(extract_components(m, labels, ClassSet()), only_chair), ConfigError);
}

TEST(ComponentsTest, UnknownAndMixedTrianglesAreExcluded) {
  SemanticMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)};
  m.triangles = {{0, 1, 2}, {1, 3, 2}};
  EXPECT_TRUE(extract_components(m, {kUnknown, kUnknown, kUnknown, kUnknown}, ClassSet()).empty());
  const auto c = extract_components(m, {kChair, kChair, kChair, kLamp}, ClassSet());
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].triangle_count, 1u);
  EXPECT_EQ(c[0].source_vertices, (std::vector<std::uint32_t>{0, 1, 2}));
}

TEST(ComponentsTest, SharedVertexConnectsTriangles) {
  SemanticMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(-1, 0, 0), Vec3(0, -1, 0)};
  m.triangles = {{0, 1, 2}, {0, 3, 4}};
  const auto c = extract_components(m, std::vector<std::size_t>(5, kChair), ClassSet());
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].triangle_count, 2u);
}

TEST(ComponentsTest, SameGeometryDifferentClassesSplit) {
  SemanticMesh m;
  std::vector<std::size_t> labels;
  add_strip(m, labels, 4, kChair, 0.0);
  // Relabel the far end as Lamp: the strip splits and the mixed triangles
  // in between drop out.
  labels[4] = labels[5] = kLamp;
  const auto c = extract_components(m, labels, ClassSet());
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].class_index, kChair);
  EXPECT_EQ(c[0].triangle_count, 2u);
}

TEST(ComponentsTest, InputSizeMismatchIsAContractError) {
  SemanticMesh m;
  m.vertices = {Vec3(0, 0, 0)};
  EXPECT_THROW(extract_components(m, {}, ClassSet()), ContractError);
}

// Random grid with random per-vertex labels.
struct RandomLabeledGrid {
  SemanticMesh mesh;
  std::vector<std::size_t> labels;

  RandomLabeledGrid(std::mt19937_64& rng, int n, double p_unknown) {
    for (int j = 0; j <= n; ++j) {
      for (int i = 0; i <= n; ++i) {
        mesh.vertices.emplace_back(i + testing::uniform(rng, -0.2, 0.2), j + testing::uniform(rng, -0.2, 0.2), 0);
        labels.push_back(testing::uniform(rng, 0, 1) < p_unknown ? kUnknown : rng() % 2);
      }
    }
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const auto a = static_cast<std::uint32_t>(j * (n + 1) + i);
        const auto b = a + 1, c = a + static_cast<std::uint32_t>(n + 1), d = c + 1;
        mesh.triangles.push_back({a, b, d});
        mesh.triangles.push_back({a, d, c});
      }
    }
    // Blocks of constant label make larger components.
    for (auto& l : labels) {
      if (rng() % 3 == 0) l = kChair;
    }
  }
};

TEST(ComponentsTest, PartitionProperty) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    RandomLabeledGrid g(rng, 20, 0.2);
    const auto comps = extract_components(g.mesh, g.labels, ClassSet());
    std::multiset<std::array<Vec3, 3>, bool (*)(const std::array<Vec3, 3>&, const std::array<Vec3, 3>&)> seen(
        [](const std::array<Vec3, 3>& a, const std::array<Vec3, 3>& b) {
          for (int k = 0; k < 3; ++k) {
            for (int d = 0; d < 3; ++d) {
              if (a[k][d] != b[k][d]) return a[k][d] < b[k][d];
            }
          }
          return false;
        });
    for (const auto& c : comps) {
      for (const auto& t : c.triangles) seen.insert({c.vertices[t[0]], c.vertices[t[1]], c.vertices[t[2]]});
    }
    std::size_t expected = 0;
    for (const auto& t : g.mesh.triangles) {
      const auto l = g.labels[t[0]];
      if (l == kUnknown || l != g.labels[t[1]] || l != g.labels[t[2]]) continue;
      ++expected;
      EXPECT_EQ(seen.count({g.mesh.vertices[t[0]], g.mesh.vertices[t[1]], g.mesh.vertices[t[2]]}), 1u);
    }
    EXPECT_EQ(seen.size(), expected);
  }
}

TEST(ComponentsTest, ReindexingIsBitExactAndOrdered) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    RandomLabeledGrid g(rng, 15, 0.3);
    const auto comps = extract_components(g.mesh, g.labels, ClassSet());
    std::uint32_t last_min = 0;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const auto& c = comps[i];
      EXPECT_EQ(c.component_id, i);
      ASSERT_EQ(c.vertices.size(), c.source_vertices.size());
      ASSERT_TRUE(std::is_sorted(c.source_vertices.begin(), c.source_vertices.end()));
      for (std::size_t v = 0; v < c.vertices.size(); ++v) {
        EXPECT_EQ(c.vertices[v], g.mesh.vertices[c.source_vertices[v]]);
        EXPECT_EQ(g.labels[c.source_vertices[v]], c.class_index);
      }
      if (i > 0) {
        EXPECT_GT(c.source_vertices.front(), last_min);
      }
      last_min = c.source_vertices.front();
      EXPECT_EQ(c.triangle_count, c.triangles.size());
    }
  }
}

TEST(ComponentsTest, RaisingThresholdNeverAddsComponents) {
  std::mt19937_64 rng(43);
  RandomLabeledGrid g(rng, 30, 0.2);
  const auto comps = extract_components(g.mesh, g.labels, ClassSet());
  std::size_t last = comps.size() + 1;
  for (std::size_t th = 0; th < 60; th += 3) {
    const auto kept = filter_components(comps, ThresholdTable{{"Chair", th}, {"Lamp", th}}).size();
    EXPECT_LE(kept, last);
    last = kept;
  }
}

TEST(BatchTest, TriggerEveryBatchSizeFrames) {
  EXPECT_FALSE(batch_trigger(4));
  EXPECT_TRUE(batch_trigger(5));
  EXPECT_TRUE(batch_trigger(2, 2));
  EXPECT_FALSE(batch_trigger(0, 1));
}

TEST(ComponentsTest, FileNameAndMesh) {
  SemanticMesh m;
  std::vector<std::size_t> labels;
  add_strip(m, labels, 3, kLamp, 0.0);
  auto c = extract_components(m, labels, ClassSet());
  ASSERT_EQ(c.size(), 1u);
  c[0].component_id = 7;
  EXPECT_EQ(component_file_name(c[0]), "component_7_lamp.ply");
  const auto mesh = component_mesh(c[0]);
  EXPECT_EQ(mesh.triangle_count(), 3u);
  EXPECT_EQ(mesh.vertex_count(), 5u);
}

}  // namespace
}  // namespace semfuse
