#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "semfuse/semfuse.hpp"

namespace fs = std::filesystem;
using namespace semfuse;

namespace {

// Command-line values that override the config file, keyed like it.
class Overrides {
 public:
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    opts_.emplace_back(key, app->add_option(flag, values_[key], help));
  }

  void apply(RunConfig& c) const {
    for (const auto& [key, opt] : opts_) {
      if (opt->count() > 0) set_config_value(c, key, values_.at(key));
    }
  }

 private:
  std::vector<std::pair<std::string, CLI::Option*>> opts_;
  std::map<std::string, std::string> values_;
};

RunConfig load_config(const std::string& path, const Overrides& ov) {
  RunConfig c;
  if (!path.empty()) apply_config_file(c, path);
  ov.apply(c);
  return c;
}

void print_batches(const SessionReport& r) {
  for (const auto& b : r.batches) {
    std::map<std::string, int> counts;
    for (const auto& c : b.components) ++counts[c.class_name];
    std::printf("batch %u after %llu frames:", b.batch_id, static_cast<unsigned long long>(b.frames_fused));
    if (counts.empty()) std::printf(" no components");
    for (const auto& [name, n] : counts) std::printf(" %s=%d", name.c_str(), n);
    std::printf("\n");
  }
}

std::optional<protocol::Selection> select_towards(const Vec3& target, const std::vector<CameraFrame>& frames,
                                                  const std::vector<LabeledComponent>& components) {
  for (const auto& f : frames) {
    const auto hit = raycast(GazeRay::towards(f.position(), target), components);
    if (hit && detail::iequals(hit->class_name, "Lamp")) return protocol::Selection{hit->point, hit->class_name};
  }
  return std::nullopt;
}

int cmd_gen_scene(const RunConfig& c, const std::string& out, const std::string& traj,
                  const std::string& traj_out) {
  const auto scene = make_scene(c);
  ply::WriteOptions opt;
  opt.probabilities = false;
  ply::write_file(out, scene.mesh, opt);
  std::printf("scene: %zu vertices, %zu triangles, %zu objects -> %s\n", scene.mesh.vertex_count(),
              scene.mesh.triangle_count(), scene.objects.size(), out.c_str());
  if (!traj_out.empty()) {
    int n = 0;
    if (std::sscanf(traj.c_str(), "orbit:%d", &n) != 1 || n < 1) {
      throw ConfigError("trajectory spec must be orbit:<frames>, got '" + traj + "'");
    }
    RunConfig tc = c;
    tc.frames = n;
    const auto t = make_orbit(scene, tc);
    for (const auto& w : t.warnings) log::warn(w);
    io::write_poses(traj_out, t.poses());
    std::printf("trajectory: %zu poses -> %s\n", t.frames.size(), traj_out.c_str());
  }
  return 0;
}

int cmd_simulate(const RunConfig& c) {
  const auto r = run_simulation(c);
  const auto acc = evaluate_fusion(r.scene, r.trajectory.frames, r.fused_labels);
  std::map<std::string, int> counts;
  for (const auto& comp : r.final_components) ++counts[comp.class_name];
  std::printf("scene: %zu vertices, %zu triangles, %zu objects\n", r.scene.mesh.vertex_count(),
              r.scene.mesh.triangle_count(), r.scene.objects.size());
  std::printf("frames fused: %llu, component batches: %zu, bytes sent: %llu (%.1f MB/s)\n",
              static_cast<unsigned long long>(r.server.state.frames_fused), r.server.batches.size(),
              static_cast<unsigned long long>(r.client.bytes_sent), r.client.send_rate() / 1e6);
  print_batches(r.server);
  std::printf("final components:");
  for (const auto& [name, n] : counts) std::printf(" %s=%d", name.c_str(), n);
  std::printf("\nobject vertex accuracy: %.2f%% of %zu visible object vertices\n",
              100.0 * acc.object_accuracy(), acc.object_vertices);
  std::optional<MetricSummary> reprojected;
  if (!r.fused_labels.empty() && !r.trajectory.frames.empty()) {
    reprojected = reprojected_metrics(r.scene, r.trajectory.frames, r.fused_labels);
    std::printf("reprojected labels, pooled over %zu frames:\n%s", r.trajectory.frames.size(),
                metrics_table(*reprojected).c_str());
  }
  if (r.client.selection) {
    const auto& p = r.client.selection->point;
    std::printf("selection: %s at (%.3f, %.3f, %.3f)\n", r.client.selection->class_name.c_str(), p.x(),
                p.y(), p.z());
  } else {
    std::printf("selection: none\n");
  }
  std::printf("lamp_on: %s\n", r.server.actuator.lamp_on ? "true" : "false");
  if (!c.out.empty() && reprojected) {
    std::ofstream(fs::path(c.out) / "metrics.csv") << metrics_csv(*reprojected);
    std::printf("wrote %s\n", (fs::path(c.out) / "metrics.csv").string().c_str());
  }
  for (const auto& f : r.files) std::printf("wrote %s\n", (fs::path(c.out) / f).string().c_str());
  return 0;
}

int cmd_serve(const RunConfig& c) {
  const ClassSet classes;
  std::unique_ptr<SegmentationSource> segmenter;
  if (!c.smap_dir.empty()) {
    segmenter = std::make_unique<FileSegmenter>(c.smap_dir, classes);
  } else if (!c.scene.empty()) {
    auto scene = std::make_shared<const SemanticMesh>(ply::read_file(c.scene));
    segmenter = std::make_unique<OracleSegmenter>(scene, classes, noise_model(c, classes.size()));
  } else {
    throw ConfigError("serve needs a score-map directory (smap_dir) or a labeled scene (scene)");
  }
  ServerSession server(server_config(c), *segmenter);
  SessionArtifacts artifacts(c.out, server);
  TcpListener listener(c.port, c.host);
  std::printf("listening on %s:%d\n", c.host.c_str(), listener.port());
  std::fflush(stdout);
  auto stream = listener.accept();
  const auto report = server.run(stream);
  artifacts.finish(report);
  std::printf("frames fused: %llu, batches: %zu, protocol errors: %zu, lamp_on: %s\n",
              static_cast<unsigned long long>(report.state.frames_fused), report.batches.size(),
              report.errors_sent.size(), report.actuator.lamp_on ? "true" : "false");
  print_batches(report);
  if (report.stream_error) throw Error("session", report.stream_error_text);
  return 0;
}

int cmd_replay(const RunConfig& c) {
  if (c.scene.empty() || c.trajectory.empty()) throw ConfigError("replay needs a scene and a trajectory");
  const auto scene = ply::read_file(c.scene);
  const auto cam = camera_intrinsics(c);
  std::vector<CameraFrame> frames;
  for (const auto& pose : io::read_poses(c.trajectory)) {
    frames.emplace_back(cam.width, cam.height, pose, cam.projection(), frames.size());
  }
  const ClassSet classes;
  const auto unknown = static_cast<std::uint8_t>(classes.unknown_index());
  ImageSource images = [&](const CameraFrame& f) {
    if (scene.has_labels()) return label_color_image(scene, f, unknown);
    return std::vector<std::uint8_t>(static_cast<std::size_t>(f.width()) * f.height() * 4, 128);
  };
  SemanticMesh geometry;
  geometry.vertices = scene.vertices;
  geometry.triangles = scene.triangles;
  ReplayClient client(client_config(c), std::move(geometry), frames, images);

  const auto lamp = classes.index_of("Lamp");
  if (c.select_lamp && scene.has_labels() && lamp) {
    Vec3 sum = Vec3::Zero();
    std::size_t n = 0;
    for (std::size_t v = 0; v < scene.vertex_count(); ++v) {
      if (scene.labels[v] == *lamp) {
        sum += scene.vertices[v];
        ++n;
      }
    }
    if (n > 0) {
      const Vec3 target = sum / static_cast<double>(n);
      client.selection_script = [&frames, target](const std::vector<LabeledComponent>& latest) {
        return select_towards(target, frames, latest);
      };
    }
  }

  auto stream = connect_tcp(c.host, c.port);
  const auto r = client.run(stream);
  std::printf("frames sent: %llu, answered: %llu, batches received: %zu, errors: %zu\n",
              static_cast<unsigned long long>(r.frames_sent), static_cast<unsigned long long>(r.frames_answered),
              r.batches.size(), r.errors.size());
  std::printf("bytes sent: %llu in %.2f s (%.2f MB/s), max backlog: %zu images\n",
              static_cast<unsigned long long>(r.bytes_sent), r.seconds, r.send_rate() / 1e6, r.backlog_max);
  if (r.selection) {
    std::printf("selection: %s acked=%s\n", r.selection->class_name.c_str(), r.selection_acked ? "yes" : "no");
  }
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    std::ofstream csv(fs::path(c.out) / "replay_backlog.csv");
    csv << "capture_index,backlog\n";
    for (std::size_t k = 0; k < r.backlog.size(); ++k) csv << k << ',' << r.backlog[k] << '\n';
  }
  if (r.aborted) throw Error("session", "replay aborted: " + r.abort_reason);
  return 0;
}

std::vector<std::size_t> load_labels(const fs::path& p) {
  if (p.extension() == ".pgm") {
    const auto img = io::read_pgm(p.string());
    return {img.pixels.begin(), img.pixels.end()};
  }
  const auto mesh = ply::read_file(p.string());
  if (!mesh.has_labels()) throw FormatError("eval", "'" + p.string() + "' has no label property");
  return {mesh.labels.begin(), mesh.labels.end()};
}

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir, const std::string& class_list,
             const std::string& out) {
  std::vector<std::string> names;
  for (std::size_t pos = 0; pos <= class_list.size();) {
    const auto comma = std::min(class_list.find(',', pos), class_list.size());
    names.push_back(class_list.substr(pos, comma - pos));
    pos = comma + 1;
  }
  const ClassSet classes(names);
  std::vector<fs::path> gt_files;
  for (const auto& e : fs::directory_iterator(gt_dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".pgm" || ext == ".ply")) gt_files.push_back(e.path());
  }
  std::sort(gt_files.begin(), gt_files.end());
  if (gt_files.empty()) throw FormatError("eval", "no .pgm or .ply files in '" + gt_dir + "'");
  ConfusionMatrix cm(classes.size());
  for (const auto& g : gt_files) {
    const auto p = fs::path(pred_dir) / g.filename();
    if (!fs::exists(p)) throw FormatError("eval", "missing prediction '" + p.string() + "'");
    cm.accumulate(load_labels(p), load_labels(g));
  }
  const auto summary = summarize(cm);
  std::printf("%zu pairs\n%s\n%s", gt_files.size(), metrics_table(summary).c_str(), metrics_csv(summary).c_str());
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream csv(fs::path(out) / "metrics.csv");
    csv << metrics_csv(summary);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic mesh fusion server, replay client and tools"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key=value configuration file")->check(CLI::ExistingFile);

  Overrides ov;
  auto session_flags = [&ov](CLI::App* a) {
    ov.add(a, "--port", "port", "TCP port (default 9464)");
    ov.add(a, "--host", "host", "host address");
    ov.add(a, "--batch-size", "batch_size", "frames per component batch");
    ov.add(a, "--pacing", "pacing", "device frames between photos (0 = as fast as possible)");
    ov.add(a, "--throttle-bytes-per-sec", "throttle_bytes_per_sec", "client upload limit, 0 = off");
    ov.add(a, "--thresholds", "thresholds", "minimum triangles per class, e.g. chair=30,lamp=5");
    ov.add(a, "--near-skip-m", "near_skip_m", "near-skip distance in meters (<= 0 disables)");
    ov.add(a, "--seed", "seed", "random seed");
    ov.add(a, "--out", "out", "output directory");
    ov.add(a, "--noise", "noise", "oracle label flip probability");
    ov.add(a, "--frames", "frames", "trajectory length");
  };

  auto* serve = app.add_subcommand("serve", "serve one client session");
  session_flags(serve);
  ov.add(serve, "--scene", "scene", "labeled scene PLY for the oracle segmenter");
  ov.add(serve, "--smap-dir", "smap_dir", "directory of recorded score maps");
  ov.add(serve, "--actuation-command", "actuation_command", "shell command run with on|off on lamp toggles");

  auto* replay = app.add_subcommand("replay", "replay a scene and trajectory against a server");
  session_flags(replay);
  ov.add(replay, "--scene", "scene", "scene PLY to upload");
  ov.add(replay, "--trajectory", "trajectory", "pose file, one row-major 4x4 per line");
  ov.add(replay, "--mesh-delay-frames", "mesh_delay_frames", "device frames to wait before sending the mesh");

  auto* simulate = app.add_subcommand("simulate", "run server and client in-process end to end");
  session_flags(simulate);
  ov.add(simulate, "--chairs", "chairs", "number of chairs");
  ov.add(simulate, "--lamps", "lamps", "number of lamps");
  ov.add(simulate, "--mesh-delay-frames", "mesh_delay_frames", "device frames to wait before sending the mesh");

  auto* eval = app.add_subcommand("eval", "segmentation metrics over paired label files");
  std::string pred_dir, gt_dir, class_list = "Lamp,Chair,Unknown", eval_out;
  eval->add_option("--pred", pred_dir, "predicted labels (PGM or labeled PLY)")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--gt", gt_dir, "ground-truth labels, same file names")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--classes", class_list, "class names in label-index order");
  eval->add_option("--out", eval_out, "directory for metrics.csv");

  auto* gen = app.add_subcommand("gen-scene", "generate a synthetic scene and trajectory");
  std::string scene_out, traj = "orbit:24", traj_out;
  ov.add(gen, "--seed", "seed", "random seed");
  ov.add(gen, "--chairs", "chairs", "number of chairs");
  ov.add(gen, "--lamps", "lamps", "number of lamps");
  ov.add(gen, "--density", "density", "triangles per cubic meter of room");
  gen->add_option("--out", scene_out, "scene PLY path")->required();
  gen->add_option("--traj", traj, "trajectory spec, orbit:<frames>");
  gen->add_option("--traj-out", traj_out, "pose file path");

  auto* dump = app.add_subcommand("dump-smap", "write the argmax of a score map as a PGM");
  std::string smap_in, pgm_out;
  dump->add_option("input", smap_in, "SMAP file")->required()->check(CLI::ExistingFile);
  dump->add_option("output", pgm_out, "PGM path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const auto config = load_config(config_path, ov);
    if (*serve) return cmd_serve(config);
    if (*replay) return cmd_replay(config);
    if (*simulate) return cmd_simulate(config);
    if (*eval) return cmd_eval(pred_dir, gt_dir, class_list, eval_out);
    if (*gen) return cmd_gen_scene(config, scene_out, traj, traj_out);
    if (*dump) {
      const auto map = read_score_map(smap_in);
      write_argmax_pgm(pgm_out, map, ClassSet().unknown_index());
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "semfuse: config: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "semfuse: " << e.module() << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "semfuse: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
