// Acceptance checks, one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <future>
#include <map>
#include <numeric>
#include <sstream>

#include "message_factory.hpp"
#include "semfuse/semfuse.hpp"
#include "test_support.hpp"

using namespace semfuse;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a failed check; the first failure message is kept.
  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail.str("");
    if (pass) detail << "failed: " << what;
    pass = false;
  }
  void note(const std::string& s) {
    if (pass) detail << (detail.tellp() > 0 ? "; " : "") << s;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ScoreMap constant_map(int w, int h, const std::vector<double>& p) {
  ScoreMap m(w, h, p.size());
  for (std::size_t i = 0; i < m.pixel_count(); ++i) std::copy(p.begin(), p.end(), m.data.begin() + i * p.size());
  return m;
}

// 1 -------------------------------------------------------------------------
void bayes_algebra(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  double worst_norm = 0, worst_identity = 0, worst_commute = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 2 + rng() % 6;
    const auto prior = testing::random_distribution(rng, n);
    const auto a = testing::random_distribution(rng, n);
    const auto b = testing::random_distribution(rng, n);

    auto p = prior;
    bayes_update(p, a, 1e-6);
    worst_norm = std::max(worst_norm, std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0));

    auto q = prior;
    bayes_update(q, std::vector<double>(n, 1.0 / static_cast<double>(n)), 1e-6);
    for (std::size_t k = 0; k < n; ++k) worst_identity = std::max(worst_identity, std::abs(q[k] - prior[k]));

    auto ab = prior, ba = prior;
    bayes_update(ab, a, 1e-6);
    bayes_update(ab, b, 1e-6);
    bayes_update(ba, b, 1e-6);
    bayes_update(ba, a, 1e-6);
    for (std::size_t k = 0; k < n; ++k) worst_commute = std::max(worst_commute, std::abs(ab[k] - ba[k]));
  }

  // Two whole frames through the fusion pipeline with near-skip disabled.
  SemanticMesh m;
  for (int t = 0; t < 20; ++t) {
    const auto base = static_cast<std::uint32_t>(m.vertices.size());
    const Vec3 c(testing::uniform(rng, -1, 1), testing::uniform(rng, -1, 1), -testing::uniform(rng, 0.5, 4));
    for (int k = 0; k < 3; ++k) m.vertices.push_back(c + testing::random_vec(rng, -0.4, 0.4));
    m.triangles.push_back({base, base + 1, base + 2});
  }
  FusionConfig cfg;
  cfg.near_skip_distance = 0.0;
  auto ab = init_state(m, ClassSet(), cfg), ba = ab;
  const CameraFrame f(48, 48, Mat4::Identity(), make_perspective(1.4, 1.0, 0.05, 20.0));
  ScoreMap sa(48, 48, 3), sb(48, 48, 3);
  for (std::size_t px = 0; px < sa.pixel_count(); ++px) {
    const auto da = testing::random_distribution(rng, 3), db = testing::random_distribution(rng, 3);
    std::copy(da.begin(), da.end(), sa.data.begin() + px * 3);
    std::copy(db.begin(), db.end(), sb.data.begin() + px * 3);
  }
  fuse_frame(ab, f, sa);
  fuse_frame(ab, f, sb);
  fuse_frame(ba, f, sb);
  fuse_frame(ba, f, sa);
  for (std::size_t i = 0; i < ab.mesh.probabilities.size(); ++i) {
    worst_commute = std::max(worst_commute, std::abs(ab.mesh.probabilities[i] - ba.mesh.probabilities[i]));
  }

  const double secs = seconds_since(t0);
  o.require(worst_norm <= 1e-9, "posterior sum off by " + fmt("%.3g", worst_norm));
  o.require(worst_identity <= 1e-12, "uniform likelihood moved a prior by " + fmt("%.3g", worst_identity));
  o.require(worst_commute <= 1e-9, "update order changed a posterior by " + fmt("%.3g", worst_commute));
  o.require(secs < 5.0, "took " + fmt("%.2f s", secs));
  o.note("10000 cases, max |sum-1| " + fmt("%.1e", worst_norm) + ", identity " + fmt("%.1e", worst_identity) +
         ", commute " + fmt("%.1e", worst_commute));
}

// 2 -------------------------------------------------------------------------
void rasterizer_oracle(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1002);
  std::size_t covered = 0, agree = 0;
  for (int i = 0; i < 100; ++i) {
    const Mat4 pose = testing::random_pose(rng);
    const Mat4 proj = make_perspective(testing::uniform(rng, 0.6, 1.6), 1.0, 0.05, 50.0);
    const int n = 1 + static_cast<int>(rng() % 50);
    const auto m = testing::frustum_mesh(rng, pose, n, i % 5 == 4);
    const CameraFrame f(64, 64, pose, proj);
    const auto dm = render_depth(m, f);
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        const double ref = testing::ray_cast_depth(m, pose, proj, 64, 64, x, y);
        const double got = dm.at(x, y);
        if (std::isinf(ref) && std::isinf(got)) continue;
        ++covered;
        if (std::isfinite(ref) && std::isfinite(got) && std::abs(got - ref) <= 1e-4 * ref) ++agree;
      }
    }
  }
  const double frac = covered ? static_cast<double>(agree) / static_cast<double>(covered) : 0.0;

  SemanticMesh plane;
  plane.vertices = {Vec3(-50, -50, -2.5), Vec3(50, -50, -2.5), Vec3(50, 50, -2.5), Vec3(-50, 50, -2.5)};
  plane.triangles = {{0, 1, 2}, {0, 2, 3}};
  const auto pm = render_depth(plane, CameraFrame(64, 64, Mat4::Identity(), make_perspective(0.9, 1.0, 0.05, 20.0)));
  double plane_err = 0;
  for (double d : pm.depth) plane_err = std::max(plane_err, std::abs(d - 2.5));

  const double secs = seconds_since(t0);
  o.require(covered > 10000, "only " + std::to_string(covered) + " covered pixels");
  o.require(frac >= 0.99, "agreement " + fmt("%.4f", frac));
  o.require(pm.covered_pixels() == 64u * 64u && plane_err <= 1e-5, "plane depth error " + fmt("%.3g", plane_err));
  o.require(secs < 60.0, "took " + fmt("%.2f s", secs));
  o.note("100 meshes, " + std::to_string(covered) + " covered pixels, agreement " + fmt("%.5f", frac) +
         ", plane error " + fmt("%.1e", plane_err) + ", " + fmt("%.1f s", secs));
}

// 3 -------------------------------------------------------------------------
void visibility_gate(Outcome& o) {
  // Small quad 2 m away in front of a large one 4 m away; vertex 8 sits on
  // the back plane behind the small quad, vertex 9 is its uncovered twin.
  SemanticMesh m;
  m.vertices = {Vec3(-0.5, -0.5, -2), Vec3(0.5, -0.5, -2), Vec3(0.5, 0.5, -2), Vec3(-0.5, 0.5, -2),
                Vec3(-4, -4, -4),     Vec3(4, -4, -4),     Vec3(4, 4, -4),     Vec3(-4, 4, -4),
                Vec3(0.1, 0.05, -4),  Vec3(2.5, 0.05, -4)};
  m.triangles = {{0, 1, 2}, {0, 2, 3}, {4, 5, 6}, {4, 6, 7}};
  auto state = init_state(m, ClassSet());
  const std::vector<double> init(state.mesh.distribution(8).begin(), state.mesh.distribution(8).end());
  const CameraFrame f(64, 64, Mat4::Identity(), make_perspective(1.6, 1.0, 0.05, 20.0));
  std::mt19937_64 rng(1003);
  int twin_updates = 0;
  for (int i = 0; i < 10; ++i) {
    const std::vector<double> before(state.mesh.distribution(9).begin(), state.mesh.distribution(9).end());
    fuse_frame(state, f, constant_map(64, 64, testing::random_distribution(rng, 3, 0.05)));
    const auto after = state.mesh.distribution(9);
    twin_updates += !std::equal(before.begin(), before.end(), after.begin());
  }
  const auto occ = state.mesh.distribution(8);
  const bool identical = std::memcmp(occ.data(), init.data(), init.size() * sizeof(double)) == 0;
  o.require(identical, "occluded vertex changed");
  o.require(twin_updates == 10, "twin updated in " + std::to_string(twin_updates) + " of 10 frames");
  o.note("occluded vertex bit-identical after 10 frames, twin updated 10/10");
}

// 4 -------------------------------------------------------------------------
void near_skip(Outcome& o) {
  // Left quad at 1.5 m, right quad at 3.0 m; probe vertices 8 and 9 on them.
  SemanticMesh m;
  m.vertices = {Vec3(-1.2, -0.5, -1.5), Vec3(-0.1, -0.5, -1.5), Vec3(-0.1, 0.5, -1.5), Vec3(-1.2, 0.5, -1.5),
                Vec3(0.2, -1, -3),      Vec3(2.4, -1, -3),      Vec3(2.4, 1, -3),      Vec3(0.2, 1, -3),
                Vec3(-0.6, 0.02, -1.5), Vec3(1.2, 0.02, -3)};
  m.triangles = {{0, 1, 2}, {0, 2, 3}, {4, 5, 6}, {4, 6, 7}};
  auto state = init_state(m, ClassSet());
  const auto unknown = state.class_set.unknown_index();
  const std::vector<double> init(state.mesh.distribution(8).begin(), state.mesh.distribution(8).end());
  const CameraFrame f(64, 64, Mat4::Identity(), make_perspective(1.6, 1.0, 0.05, 20.0));
  const auto unknown_map = constant_map(64, 64, {0.15, 0.15, 0.7});
  int near_reported = 0, far_reported = 0;
  for (int i = 0; i < 10; ++i) {
    const std::vector<double> before(state.mesh.distribution(9).begin(), state.mesh.distribution(9).end());
    const auto r = fuse_frame(state, f, unknown_map);
    const auto& sk = r.skipped_near_vertices;
    near_reported += std::binary_search(sk.begin(), sk.end(), 8u);
    far_reported += std::binary_search(sk.begin(), sk.end(), 9u);
    const auto after = state.mesh.distribution(9);
    o.require(!std::equal(before.begin(), before.end(), after.begin()), "far vertex not updated");
  }
  const auto near = state.mesh.distribution(8);
  o.require(std::memcmp(near.data(), init.data(), init.size() * sizeof(double)) == 0, "near vertex changed");
  o.require(near_reported == 10, "near vertex reported skipped in " + std::to_string(near_reported) + "/10");
  o.require(far_reported == 0, "far vertex reported skipped");
  o.require(argmax_class(state.mesh.distribution(9), unknown) == unknown, "far vertex not Unknown");
  o.note("1.5 m vertex skipped 10/10 and unchanged, 3.0 m vertex updated 10/10");
}

// 5 -------------------------------------------------------------------------
void add_strip(SemanticMesh& m, std::vector<std::size_t>& labels, std::size_t n, std::size_t label, double y) {
  const auto base = static_cast<std::uint32_t>(m.vertices.size());
  for (std::size_t i = 0; i < n + 2; ++i) {
    m.vertices.emplace_back(0.1 * static_cast<double>(i / 2), y + 0.1 * static_cast<double>(i % 2), 0.0);
    labels.push_back(label);
  }
  for (std::uint32_t i = 0; i < n; ++i) m.triangles.push_back({base + i, base + i + 1, base + i + 2});
}

void component_thresholds(Outcome& o) {
  const ClassSet classes;
  const auto chair = *classes.index_of("Chair"), lamp = *classes.index_of("Lamp");
  auto kept = [&](std::size_t chair_tris, std::size_t lamp_tris) {
    SemanticMesh m;
    std::vector<std::size_t> labels;
    add_strip(m, labels, chair_tris, chair, 0.0);
    add_strip(m, labels, lamp_tris, lamp, 5.0);
    std::map<std::string, std::size_t> out;
    for (const auto& c : filter_components(extract_components(m, labels, classes), ThresholdTable::defaults())) {
      out[c.class_name] = c.triangle_count;
    }
    return out;
  };
  using Kept = std::map<std::string, std::size_t>;
  o.require(kept(30, 100) == Kept{{"Lamp", 100}}, "chair with 30 triangles kept");
  o.require(kept(31, 100) == Kept{{"Chair", 31}, {"Lamp", 100}}, "chair with 31 triangles dropped");
  o.require(kept(100, 5) == Kept{{"Chair", 100}}, "lamp with 5 triangles kept");
  o.require(kept(100, 6) == Kept{{"Chair", 100}, {"Lamp", 6}}, "lamp with 6 triangles dropped");
  o.note("chair 30 dropped / 31 kept, lamp 5 dropped / 6 kept");
}

// 6 -------------------------------------------------------------------------
void metrics(Outcome& o) {
  ConfusionMatrix perfect(3);
  perfect.at(0, 0) = 12;
  perfect.at(1, 1) = 40;
  perfect.at(2, 2) = 7;
  const auto p = summarize(perfect);
  for (double v : {p.pixel_accuracy, p.mean_accuracy, p.mean_iu, p.freq_weighted_iu}) {
    o.require(fmt("%.6f", v) == "1.000000", "perfect prediction gives " + fmt("%.6f", v));
  }

  std::mt19937_64 rng(1006);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng() % 6;
    ConfusionMatrix cm(k);
    std::vector<double> t(k, 0), col(k, 0);
    for (std::size_t i = 0; i < k; ++i) {
      const bool empty = rng() % 5 == 0 && i > 0;
      for (std::size_t j = 0; j < k; ++j) {
        cm.at(i, j) = empty ? 0 : rng() % 1000 + (i == j);
        t[i] += static_cast<double>(cm.at(i, j));
        col[j] += static_cast<double>(cm.at(i, j));
      }
    }
    double total = 0, diag = 0, acc = 0, iu = 0, fw = 0;
    int present = 0;
    for (std::size_t i = 0; i < k; ++i) {
      total += t[i];
      diag += static_cast<double>(cm.at(i, i));
      if (t[i] == 0) continue;
      ++present;
      const double nii = static_cast<double>(cm.at(i, i));
      acc += nii / t[i];
      iu += nii / (t[i] + col[i] - nii);
      fw += t[i] * nii / (t[i] + col[i] - nii);
    }
    const auto s = summarize(cm);
    for (auto [got, ref] : {std::pair{s.pixel_accuracy, diag / total}, std::pair{s.mean_accuracy, acc / present},
                            std::pair{s.mean_iu, iu / present}, std::pair{s.freq_weighted_iu, fw / total}}) {
      worst = std::max(worst, std::abs(got - ref));
    }
  }
  o.require(worst <= 1e-12, "naive oracle differs by " + fmt("%.3g", worst));

  ConfusionMatrix two(2);
  two.at(0, 0) = 50;
  two.at(0, 1) = 50;
  two.at(1, 1) = 100;
  const auto s = summarize(two);
  o.require(std::abs(s.pixel_accuracy - 0.75) <= 1e-9, "worked example pixel acc " + fmt("%.9f", s.pixel_accuracy));
  o.require(std::abs(s.mean_iu - 7.0 / 12.0) <= 1e-9, "worked example mean IU " + fmt("%.9f", s.mean_iu));
  o.note("perfect = 1.000000, 200 matrices within " + fmt("%.1e", worst) + ", example pixel acc " +
         fmt("%.4f", s.pixel_accuracy) + " mean IU " + fmt("%.4f", s.mean_iu));
}

// 7 -------------------------------------------------------------------------
RunConfig quiet_config() {
  RunConfig c;
  c.out.clear();
  return c;
}

std::map<std::string, std::size_t> count_by_class(const std::vector<LabeledComponent>& comps) {
  std::map<std::string, std::size_t> out;
  for (const auto& c : comps) ++out[c.class_name];
  return out;
}

void end_to_end_accuracy(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::uint64_t> seeds = {1, 1, 2, 3};
  std::vector<std::size_t> first_labels;
  std::string summary;
  for (std::size_t run = 0; run < seeds.size(); ++run) {
    auto cfg = quiet_config();
    cfg.seed = seeds[run];
    const auto r = run_simulation(cfg);
    const auto acc = evaluate_fusion(r.scene, r.trajectory.frames, r.fused_labels);
    std::map<std::string, std::size_t> truth;
    for (const auto& obj : r.scene.objects) ++truth[r.scene.classes.name(obj.class_index)];
    const auto got = count_by_class(r.final_components);
    const std::string tag = "seed " + std::to_string(cfg.seed);
    o.require(r.scene.objects.size() == 3 && truth["Chair"] == 2 && truth["Lamp"] == 1, tag + " scene layout");
    o.require(r.trajectory.frames.size() == 24, tag + " trajectory length");
    o.require(acc.object_accuracy() >= 0.95, tag + " accuracy " + fmt("%.4f", acc.object_accuracy()));
    o.require(got == truth, tag + " found " + std::to_string(r.final_components.size()) + " components");
    if (run == 0) first_labels = r.fused_labels;
    if (run == 1) o.require(r.fused_labels == first_labels, "repeated run with seed 1 differs");
    if (run != 1) summary += (summary.empty() ? "" : ", ") + tag + " " + fmt("%.2f%%", 100 * acc.object_accuracy());
  }
  const double secs = seconds_since(t0);
  o.require(secs < 120.0, "took " + fmt("%.1f s", secs));
  o.note(summary + "; components match objects; seed 1 repeat identical; " + fmt("%.1f s", secs));
}

// 8 -------------------------------------------------------------------------
std::optional<protocol::WireMessage> read_message(Stream& s, protocol::StreamDecoder& dec) {
  std::vector<std::uint8_t> buf(4096);
  for (;;) {
    auto r = dec.next();
    if (r.status == protocol::DecodeResult::Status::kMessage) return std::move(r.message);
    const auto n = s.read_some(buf);
    if (n == 0) return std::nullopt;
    dec.feed(std::span<const std::uint8_t>(buf).first(n));
  }
}

void protocol_checks(Outcome& o) {
  testing::MessageFactory factory(1008);
  std::size_t roundtrips = 0;
  for (int kind = 0; kind < 6; ++kind) {
    for (int i = 0; i < 10000; ++i) {
      const auto m = factory.make(kind);
      const auto bytes = protocol::encode(m);
      const auto r = protocol::decode(bytes);
      const bool ok = r.status == protocol::DecodeResult::Status::kMessage && r.consumed == bytes.size() &&
                      r.message && *r.message == m;
      if (!ok) {
        o.require(false, "roundtrip of variant " + std::to_string(kind));
        return;
      }
      ++roundtrips;
    }
  }

  // Concatenated stream fed back in random-sized chunks.
  std::vector<protocol::WireMessage> sent;
  std::vector<std::uint8_t> wire;
  for (int i = 0; i < 600; ++i) {
    sent.push_back(factory.make(static_cast<int>(factory.rng()() % 6)));
    const auto b = protocol::encode(sent.back());
    wire.insert(wire.end(), b.begin(), b.end());
  }
  protocol::StreamDecoder dec;
  std::vector<protocol::WireMessage> got;
  for (std::size_t pos = 0; pos < wire.size();) {
    const std::size_t n = std::min<std::size_t>(1 + factory.rng()() % 97, wire.size() - pos);
    dec.feed(std::span<const std::uint8_t>(wire).subspan(pos, n));
    pos += n;
    for (auto r = dec.next(); r.status == protocol::DecodeResult::Status::kMessage; r = dec.next()) {
      got.push_back(std::move(*r.message));
    }
  }
  o.require(got == sent, "chunked reassembly");

  // Phase gate on a live session: a frame before the mesh is refused, the
  // connection stays usable and the mesh is then accepted.
  auto spec = default_scene_spec(8);
  spec.density = 200;
  const auto scene = generate_scene(spec);
  OracleSegmenter seg(std::make_shared<const SemanticMesh>(scene.mesh), scene.classes,
                      NoiseModel::symmetric(3, 0.0));
  ServerSession server({}, seg);
  TcpListener listener(0);
  auto fut = std::async(std::launch::async, [&] {
    auto s = listener.accept();
    return server.run(s);
  });
  auto client = connect_tcp("127.0.0.1", listener.port());
  protocol::FrameCapture frame;
  frame.width = 16;
  frame.height = 9;
  frame.bgra.assign(16 * 9 * 4, 0);
  frame.camera_to_world = look_at(Vec3(1, 1.6, 1), Vec3(0, 0.4, 0));
  frame.projection = make_perspective(0.7, 16.0 / 9.0, 0.05, 20.0);
  protocol::StreamDecoder replies;
  client.write_all(protocol::encode(frame));
  const auto first = read_message(client, replies);
  const auto* err = first ? std::get_if<protocol::ProtocolError>(&*first) : nullptr;
  o.require(err && err->code == static_cast<std::uint16_t>(protocol::ErrorCode::kMeshFirst),
            "frame before mesh not refused");
  client.write_all(protocol::encode(protocol::MeshUpload{scene.mesh.vertices, scene.mesh.triangles}));
  const auto second = read_message(client, replies);
  const auto* ack = second ? std::get_if<protocol::Ack>(&*second) : nullptr;
  o.require(ack && ack->ref_id == 0, "mesh after refused frame not acknowledged");
  client.shutdown_write();
  const auto report = fut.get();
  o.require(report.state.frames_fused == 0, "refused frame was fused");

  // Default run: 24 frames with batches of five.
  const auto r = run_simulation(quiet_config());
  o.require(r.server.state.frames_fused == 24, "simulate fused " + std::to_string(r.server.state.frames_fused));
  o.require(r.server.batches.size() == 4 && r.client.batches.size() == 4,
            "simulate emitted " + std::to_string(r.server.batches.size()) + " batches");
  o.note(std::to_string(roundtrips) + " roundtrips, 600-message chunked stream, frame-before-mesh refused, "
         "24 frames gave " + std::to_string(r.client.batches.size()) + " batches");
}

// 9 -------------------------------------------------------------------------
void throughput(Outcome& o) {
  auto cfg = quiet_config();
  cfg.select_lamp = false;
  const auto r = run_simulation(cfg);
  const auto tris = r.scene.mesh.triangle_count();
  const double fps = static_cast<double>(r.server.state.frames_fused) / r.client.seconds;
  o.require(cfg.width == 896 && cfg.height == 504, "resolution");
  o.require(tris >= 40000 && tris <= 60000, "mesh has " + std::to_string(tris) + " triangles");
  o.require(fps >= 1.0, "end-to-end rate " + fmt("%.2f fps", fps));

  // One 896x504 BGRA image is 1.81 MB, so 1.8 MB/s takes about a second per
  // image. Photo waits of 30 / 60 / 100 device frames at 60 fps.
  std::map<int, ClientReport> runs;
  for (int pacing : {30, 60, 100}) {
    auto c = quiet_config();
    c.select_lamp = false;
    c.frames = 10;
    c.throttle_bytes_per_sec = 1.8e6;
    c.pacing = pacing;
    runs[pacing] = run_simulation(c).client;
  }
  const auto& fast = runs[30];
  const auto& slow = runs[100];
  o.require(fast.backlog.size() == 10 && fast.backlog.back() > fast.backlog.front() && fast.backlog_max >= 3,
            "fast pacing backlog max " + std::to_string(fast.backlog_max));
  o.require(slow.backlog_max == 0, "slow pacing backlog max " + std::to_string(slow.backlog_max));
  o.require(fast.backlog_max >= runs[60].backlog_max && runs[60].backlog_max >= slow.backlog_max,
            "backlog not ordered by pacing");
  std::string rows;
  for (const auto& [p, c] : runs) {
    rows += (rows.empty() ? "" : ", ") + std::to_string(p) + ": " + fmt("%.2f MB/s", c.send_rate() / 1e6) +
            " backlog " + std::to_string(c.backlog_max);
  }
  o.note(std::to_string(tris) + " triangles at 896x504, " + fmt("%.2f fps", fps) + "; throttled " + rows);
}

// 10 ------------------------------------------------------------------------
void interaction(Outcome& o) {
  std::mt19937_64 rng(1010);
  std::vector<LabeledComponent> comps;
  for (int c = 0; c < 6; ++c) {
    LabeledComponent comp;
    comp.component_id = static_cast<std::uint32_t>(c);
    comp.class_name = c % 2 ? "Chair" : "Lamp";
    const Vec3 center = testing::random_vec(rng, -3, 3);
    for (int t = 0; t < 20; ++t) {
      const auto b = static_cast<std::uint32_t>(comp.vertices.size());
      for (int k = 0; k < 3; ++k) comp.vertices.push_back(center + testing::random_vec(rng, -0.8, 0.8));
      comp.triangles.push_back({b, b + 1, b + 2});
    }
    comp.triangle_count = comp.triangles.size();
    comps.push_back(std::move(comp));
  }
  int hits = 0, mismatches = 0;
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 origin = testing::random_vec(rng, -5, 5);
    const auto& c = comps[rng() % comps.size()];
    const GazeRay ray = GazeRay::towards(origin, c.vertices[rng() % c.vertices.size()] + testing::random_vec(rng, -0.3, 0.3));
    std::optional<double> ref;
    for (const auto& comp : comps) {
      for (const auto& t : comp.triangles) {
        const auto d = testing::moller_trumbore(ray.origin, ray.direction, comp.vertices[t[0]], comp.vertices[t[1]],
                                                comp.vertices[t[2]]);
        if (d && (!ref || *d < *ref)) ref = d;
      }
    }
    const auto got = raycast(ray, comps);
    if (got.has_value() != ref.has_value()) {
      ++mismatches;
      continue;
    }
    if (!got) continue;
    ++hits;
    worst = std::max(worst, std::abs(got->distance - *ref));
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " rays disagree on hit/miss");
  o.require(worst <= 1e-9, "nearest-hit distance differs by " + fmt("%.3g", worst));

  // Scripted lamp selection through a full session.
  auto cfg = quiet_config();
  cfg.frames = 10;
  cfg.width = 448;
  cfg.height = 252;
  const auto r = run_simulation(cfg);
  o.require(r.client.selection && r.client.selection->class_name == "Lamp", "no lamp selection was made");
  o.require(r.client.selection_acked, "selection not acknowledged");
  o.require(r.server.actuator.lamp_on && r.server.actuator.toggle_count == 1, "lamp did not turn on");

  bool parity = true;
  for (int n = 0; n <= 10; ++n) {
    ActuatorState s;
    for (int i = 0; i < 2 * n; ++i) {
      handle_selection(SelectionEvent{Vec3::Zero(), "Lamp"}, s);
      handle_selection(SelectionEvent{Vec3::Zero(), "Chair"}, s);
    }
    parity = parity && !s.lamp_on && s.toggle_count == static_cast<std::size_t>(2 * n);
  }
  o.require(parity, "toggle parity");
  o.note("10000 rays (" + std::to_string(hits) + " hits) within " + fmt("%.1e", worst) +
         ", scripted lamp selection turned the lamp on, parity holds");
}

}  // namespace

int main() {
  log::threshold() = log::Level::kError;
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
      {"Bayes update algebra", bayes_algebra},
      {"rasterizer matches ray-cast oracle", rasterizer_oracle},
      {"visibility gate", visibility_gate},
      {"near-skip rule", near_skip},
      {"component thresholds", component_thresholds},
      {"segmentation metrics", metrics},
      {"end-to-end synthetic accuracy", end_to_end_accuracy},
      {"protocol", protocol_checks},
      {"throughput and backlog", throughput},
      {"interaction", interaction},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    std::printf("%s %zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.str().c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed;
}
