#pragma once

// In-process end-to-end run: generate a scene and an orbit, start a server
// session and a replay client over loopback TCP, fuse oracle segmentations,
// select the lamp by gaze ray and write the artifacts.

#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <thread>

#include "semfuse/components.hpp"
#include "semfuse/config.hpp"
#include "semfuse/interaction.hpp"
#include "semfuse/metrics.hpp"
#include "semfuse/ply.hpp"
#include "semfuse/scenegen.hpp"
#include "semfuse/session.hpp"

namespace semfuse {

inline constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;

inline ServerConfig server_config(const RunConfig& c) {
  ServerConfig s;
  s.batch_size = c.batch_size;
  s.thresholds = c.thresholds;
  s.fusion.near_skip_distance = c.near_skip_m;
  s.fusion.epsilon_floor = c.epsilon_floor;
  s.fusion.visibility_tolerance = c.visibility_tolerance;
  s.queue_bound = c.queue_bound;
  s.hook.command = c.actuation_command;
  return s;
}

inline ClientConfig client_config(const RunConfig& c) {
  ClientConfig k;
  k.pacing = c.pacing;
  k.device_fps = c.device_fps;
  k.throttle_bytes_per_sec = c.throttle_bytes_per_sec;
  k.batch_size = c.batch_size;
  k.mesh_delay_frames = c.mesh_delay_frames;
  return k;
}

inline CameraIntrinsics camera_intrinsics(const RunConfig& c) {
  CameraIntrinsics cam;
  cam.width = c.width;
  cam.height = c.height;
  cam.fov_y = c.fov_deg * M_PI / 180.0;
  return cam;
}

inline NoiseModel noise_model(const RunConfig& c, std::size_t classes) {
  return NoiseModel::symmetric(classes, c.noise, c.concentration,
                               detail::splitmix64(c.seed ^ kNoiseStream));
}

inline Scene make_scene(const RunConfig& c) {
  auto spec = default_scene_spec(c.seed, c.chairs, c.lamps);
  spec.density = c.density;
  return generate_scene(spec);
}

inline Trajectory make_orbit(const Scene& scene, const RunConfig& c) {
  TrajectoryOptions opt;
  opt.n_frames = c.frames;
  opt.radius = c.orbit_radius;
  opt.eye_height = c.eye_height;
  opt.camera = camera_intrinsics(c);
  return generate_trajectory(scene, opt, c.seed);
}

// Vertex-level accuracy of fused labels over vertices the ground-truth scene
// shows in at least one frame.
struct FusionAccuracy {
  std::size_t object_vertices = 0;  // visible, ground truth not Unknown
  std::size_t object_correct = 0;
  std::size_t unknown_vertices = 0;
  std::size_t unknown_correct = 0;
  ConfusionMatrix confusion;

  double object_accuracy() const {
    return object_vertices ? static_cast<double>(object_correct) / static_cast<double>(object_vertices) : 0.0;
  }
};

inline std::vector<bool> visible_in_any(const SemanticMesh& mesh, const std::vector<CameraFrame>& frames,
                                        double tolerance = kDefaultVisibilityTolerance) {
  std::vector<bool> seen(mesh.vertex_count(), false);
  for (const auto& f : frames) {
    for (const auto& v : visible_vertices(mesh, f, render_depth(mesh, f), tolerance)) seen[v.index] = true;
  }
  return seen;
}

inline FusionAccuracy evaluate_fusion(const Scene& scene, const std::vector<CameraFrame>& frames,
                                      const std::vector<std::size_t>& fused) {
  if (fused.size() != scene.mesh.vertex_count()) {
    throw ContractError("simulate", "fused label count does not match the scene");
  }
  FusionAccuracy acc;
  acc.confusion = ConfusionMatrix(scene.classes.size());
  const auto seen = visible_in_any(scene.mesh, frames);
  const auto unknown = scene.classes.unknown_index();
  for (std::size_t v = 0; v < fused.size(); ++v) {
    if (!seen[v]) continue;
    const std::size_t truth = scene.mesh.labels[v];
    ++acc.confusion.at(truth, fused[v]);
    const bool ok = truth == fused[v];
    if (truth == unknown) {
      ++acc.unknown_vertices;
      acc.unknown_correct += ok;
    } else {
      ++acc.object_vertices;
      acc.object_correct += ok;
    }
  }
  return acc;
}

enum class FrameAveraging { kPooled, kPerFrameMean };

// Fused labels reprojected into each frame and compared pixel by pixel with
// the ground-truth label image of the same mesh. Pooled sums one confusion
// matrix over all frames; per-frame mean averages each frame's metrics.
inline MetricSummary reprojected_metrics(const Scene& scene, const std::vector<CameraFrame>& frames,
                                         const std::vector<std::size_t>& fused,
                                         FrameAveraging mode = FrameAveraging::kPooled) {
  if (fused.size() != scene.mesh.vertex_count()) {
    throw ContractError("simulate", "fused label count does not match the scene");
  }
  const auto unknown = scene.classes.unknown_index();
  auto face_label = [unknown](std::size_t a, std::size_t b, std::size_t c) {
    return (a == b || a == c) ? a : (b == c ? b : unknown);
  };
  ConfusionMatrix pooled(scene.classes.size());
  MetricSummary mean{0, 0, 0, 0};
  std::size_t counted = 0;
  for (const auto& f : frames) {
    const auto ids = render(scene.mesh, f, true).triangle_ids;
    ConfusionMatrix cm(scene.classes.size());
    for (const auto id : ids) {
      if (id < 0) continue;
      const auto& t = scene.mesh.triangles[static_cast<std::size_t>(id)];
      const auto& l = scene.mesh.labels;
      ++cm.at(face_label(l[t[0]], l[t[1]], l[t[2]]), face_label(fused[t[0]], fused[t[1]], fused[t[2]]));
    }
    if (cm.total() == 0) continue;
    pooled.merge(cm);
    const auto s = summarize(cm);
    mean.pixel_accuracy += s.pixel_accuracy;
    mean.mean_accuracy += s.mean_accuracy;
    mean.mean_iu += s.mean_iu;
    mean.freq_weighted_iu += s.freq_weighted_iu;
    ++counted;
  }
  if (mode == FrameAveraging::kPooled) return summarize(pooled);
  if (counted == 0) throw UndefinedMetric("no frame shows any surface");
  const double k = static_cast<double>(counted);
  return {mean.pixel_accuracy / k, mean.mean_accuracy / k, mean.mean_iu / k, mean.freq_weighted_iu / k};
}

// First trajectory pose whose ray towards a lamp's true centroid hits a
// Lamp component.
inline std::optional<protocol::Selection> lamp_selection(const Scene& scene, const Trajectory& traj,
                                                         const std::vector<LabeledComponent>& components) {
  for (const auto& obj : scene.objects) {
    if (!detail::iequals(scene.classes.name(obj.class_index), "Lamp")) continue;
    for (const auto& f : traj.frames) {
      const auto hit = raycast(GazeRay::towards(f.position(), obj.centroid), components);
      if (hit && detail::iequals(hit->class_name, "Lamp")) return protocol::Selection{hit->point, hit->class_name};
    }
  }
  return std::nullopt;
}

// Writes a session's artifacts under one directory: per-batch component
// PLYs and the action log while the session runs, then the fused PLY
// checkpoint and the per-frame metrics and timing CSVs.
class SessionArtifacts {
 public:
  SessionArtifacts(const std::filesystem::path& out, ServerSession& server) : out_(out) {
    std::filesystem::create_directories(out_);
    actions_.open(out_ / "actions.log");
    if (!actions_) throw FormatError("session", "cannot write '" + (out_ / "actions.log").string() + "'");
    files.push_back("actions.log");
    server.on_batch = [this](const BatchRecord& b) {
      char dir[32];
      std::snprintf(dir, sizeof(dir), "batch_%03u", b.batch_id);
      std::filesystem::create_directories(out_ / dir);
      for (const auto& c : b.components) {
        ply::write_file((out_ / dir / component_file_name(c)).string(), component_mesh(c));
        files.push_back(std::string(dir) + "/" + component_file_name(c));
      }
    };
    server.on_action = [this](const ActionReport&, const std::string& line) {
      actions_ << line << '\n' << std::flush;
    };
  }

  void finish(const SessionReport& report) {
    if (report.fusion) {
      const auto& fusion = *report.fusion;
      SemanticMesh fused = fusion.mesh;
      const auto labels = argmax_labels(fusion);
      fused.labels.assign(labels.begin(), labels.end());
      ply::WriteOptions opt;
      opt.class_set = &fusion.class_set;
      ply::write_file((out_ / "fused.ply").string(), fused, opt);
      files.push_back("fused.ply");
    }
    std::ofstream csv(out_ / "session_metrics.csv");
    if (!csv) throw FormatError("session", "cannot write the session metrics CSV");
    csv << session_metrics_csv(report.frames);
    files.push_back("session_metrics.csv");
    std::ofstream(out_ / "session_timing.csv") << session_timing_csv(report.frames);
    files.push_back("session_timing.csv");
  }

  std::vector<std::string> files;  // relative to the output directory

 private:
  std::filesystem::path out_;
  std::ofstream actions_;
};

struct SimulationResult {
  Scene scene;
  Trajectory trajectory;
  SessionReport server;
  ClientReport client;
  std::vector<std::size_t> fused_labels;
  std::vector<LabeledComponent> final_components;  // from the final fused state
  std::vector<std::string> files;
};

inline SimulationResult run_simulation(const RunConfig& cfg) {
  SimulationResult result;
  result.scene = make_scene(cfg);
  result.trajectory = make_orbit(result.scene, cfg);
  for (const auto& w : result.trajectory.warnings) log::warn(w);
  const auto& scene = result.scene;

  auto truth = std::make_shared<const SemanticMesh>(scene.mesh);
  OracleSegmenter segmenter(truth, scene.classes, noise_model(cfg, scene.classes.size()));
  ServerSession server(server_config(cfg), segmenter);
  std::optional<SessionArtifacts> artifacts;
  if (!cfg.out.empty()) artifacts.emplace(cfg.out, server);

  SemanticMesh geometry;
  geometry.vertices = scene.mesh.vertices;
  geometry.triangles = scene.mesh.triangles;
  const auto unknown = static_cast<std::uint8_t>(scene.classes.unknown_index());
  ReplayClient client(client_config(cfg), std::move(geometry), result.trajectory.frames,
                      [&](const CameraFrame& f) { return label_color_image(scene.mesh, f, unknown); });
  if (cfg.select_lamp) {
    client.selection_script = [&](const std::vector<LabeledComponent>& latest) {
      return lamp_selection(scene, result.trajectory, latest);
    };
  }
  TcpListener listener(0);
  std::exception_ptr server_failure;
  std::thread server_thread([&] {
    try {
      auto stream = listener.accept();
      try {
        result.server = server.run(stream);
      } catch (...) {
        stream.shutdown_both();
        throw;
      }
    } catch (...) {
      server_failure = std::current_exception();
    }
  });

  try {
    auto stream = connect_tcp("127.0.0.1", listener.port());
    result.client = client.run(stream);
  } catch (...) {
    server_thread.join();
    throw;
  }
  server_thread.join();
  if (server_failure) std::rethrow_exception(server_failure);
  if (result.client.aborted) throw Error("session", "replay aborted: " + result.client.abort_reason);

  if (result.server.fusion) {
    const auto& fusion = *result.server.fusion;
    result.fused_labels = argmax_labels(fusion);
    result.final_components = filter_components(
        extract_components(fusion.mesh, result.fused_labels, fusion.class_set), server_config(cfg).thresholds);
  }
  if (artifacts) {
    artifacts->finish(result.server);
    result.files = artifacts->files;
  }
  return result;
}

}  // namespace semfuse
