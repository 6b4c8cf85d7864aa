#pragma once

// Server and client halves of a mapping session.
//
// Server: a reader thread decodes frames into a bounded queue; one consumer
// handles them strictly in arrival order (mesh once, then fuse every frame,
// send a ComponentBatch every `batch_size` frames, dispatch selections).
// Every MeshUpload, FrameCapture and Selection gets exactly one reply, an Ack
// or a ProtocolError, in the order received. Frame Acks carry the frame index
// and are sent after the frame is fused, so the client can track how many of
// its images are still waiting.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "semfuse/components.hpp"
#include "semfuse/fusion.hpp"
#include "semfuse/interaction.hpp"
#include "semfuse/log.hpp"
#include "semfuse/protocol.hpp"
#include "semfuse/segmentation.hpp"
#include "semfuse/transport.hpp"

namespace semfuse {

enum class Phase { kScanning, kMeshReceived, kStreaming };

struct SessionState {
  Phase phase = Phase::kScanning;
  std::uint64_t frames_received = 0;
  std::uint64_t frames_fused = 0;
  std::uint64_t frames_since_batch = 0;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
  std::size_t backlog_depth = 0;
  std::size_t backlog_max = 0;
  std::uint64_t batches_sent = 0;
};

struct ServerConfig {
  std::size_t batch_size = 5;
  ThresholdTable thresholds = ThresholdTable::defaults();
  FusionConfig fusion;
  std::size_t queue_bound = 64;
  ActuationHook hook;
};

struct FrameMetric {
  std::uint64_t frame_index = 0;
  std::uint64_t bytes_in = 0;     // stream bytes up to the end of this frame
  std::size_t backlog_depth = 0;  // frames still queued when this one was taken
  double fuse_ms = 0.0;           // segmentation + fusion
  FuseReport fuse;
};

struct BatchRecord {
  std::uint32_t batch_id = 0;
  std::uint64_t frames_fused = 0;
  std::vector<LabeledComponent> components;
};

struct SessionReport {
  SessionState state;
  std::vector<FrameMetric> frames;
  std::vector<BatchRecord> batches;
  ActuatorState actuator;
  std::vector<ActionReport> actions;
  std::vector<protocol::ProtocolError> errors_sent;
  std::optional<FusionState> fusion;
  bool stream_error = false;
  std::string stream_error_text;
};

// Columns fixed by the inputs alone; identical across runs of one seed.
inline std::string session_metrics_csv(const std::vector<FrameMetric>& frames) {
  std::string out = "frame_index,bytes_in,updated,skipped_near,invisible\n";
  char line[128];
  for (const auto& f : frames) {
    std::snprintf(line, sizeof(line), "%llu,%llu,%zu,%zu,%zu\n",
                  static_cast<unsigned long long>(f.frame_index),
                  static_cast<unsigned long long>(f.bytes_in), f.fuse.updated, f.fuse.skipped_near,
                  f.fuse.invisible);
    out += line;
  }
  return out;
}

// Wall-clock columns; these vary from run to run.
inline std::string session_timing_csv(const std::vector<FrameMetric>& frames) {
  std::string out = "frame_index,backlog_depth,fuse_ms\n";
  char line[96];
  for (const auto& f : frames) {
    std::snprintf(line, sizeof(line), "%llu,%zu,%.3f\n", static_cast<unsigned long long>(f.frame_index),
                  f.backlog_depth, f.fuse_ms);
    out += line;
  }
  return out;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

inline protocol::ComponentBatch to_wire(std::uint32_t batch_id,
                                        const std::vector<LabeledComponent>& components) {
  protocol::ComponentBatch b;
  b.batch_id = batch_id;
  for (const auto& c : components) b.components.push_back({c.class_name, c.vertices, c.triangles});
  return b;
}

// Components as received by a client; ids follow batch order.
inline std::vector<LabeledComponent> from_wire(const protocol::ComponentBatch& batch) {
  std::vector<LabeledComponent> out;
  for (const auto& e : batch.components) {
    LabeledComponent c;
    c.vertices = e.vertices;
    c.triangles = e.triangles;
    c.class_name = e.class_name;
    c.triangle_count = e.triangles.size();
    c.component_id = static_cast<std::uint32_t>(out.size());
    out.push_back(std::move(c));
  }
  return out;
}

class ServerSession {
 public:
  ServerSession(ServerConfig config, const SegmentationSource& segmenter)
      : config_(std::move(config)), segmenter_(segmenter) {
    if (config_.batch_size == 0) throw ConfigError("batch size must be at least 1");
    const auto& classes = segmenter_.class_set();
    for (std::size_t i = 0; i < classes.size(); ++i) {
      if (i != classes.unknown_index() && !config_.thresholds.get(classes.name(i))) {
        throw ConfigError("no triangle threshold configured for class '" + classes.name(i) + "'");
      }
    }
  }

  std::function<void(const BatchRecord&)> on_batch;
  std::function<void(const ActionReport&, const std::string& line)> on_action;

  // Serves one client until it closes the connection.
  SessionReport run(Stream& stream) {
    BoundedQueue<Inbound> queue(config_.queue_bound);
    std::thread reader([&] { read_loop(stream, queue); });
    SessionReport report;
    try {
      while (auto in = queue.pop()) {
        if (in->frame) queued_frames_.fetch_sub(1);
        if (in->kind == Inbound::kStreamError) {
          report.stream_error = true;
          report.stream_error_text = in->text;
          break;
        }
        handle(*in, stream, report);
      }
    } catch (const TransportError& e) {
      report.stream_error = true;
      report.stream_error_text = e.what();
    }
    if (report.stream_error) {
      log::warn("session closed: " + report.stream_error_text);
      stream.shutdown_both();
      queue.close_and_clear();
    }
    reader.join();
    report.state = state();
    report.fusion = std::move(fusion_);
    fusion_.reset();
    return report;
  }

  // Thread-safe snapshot of the counters.
  SessionState state() const {
    SessionState s;
    s.phase = phase_.load();
    s.frames_received = frames_received_.load();
    s.frames_fused = frames_fused_.load();
    s.frames_since_batch = frames_since_batch_.load();
    s.bytes_in = bytes_in_.load();
    s.bytes_out = bytes_out_.load();
    s.backlog_depth = queued_frames_.load();
    s.backlog_max = backlog_max_.load();
    s.batches_sent = batches_sent_.load();
    return s;
  }

 private:
  struct Inbound {
    enum Kind { kMessage, kUnknownTag, kMalformed, kStreamError } kind = kMessage;
    std::optional<protocol::WireMessage> message;
    std::uint8_t tag = 0;
    std::uint64_t stream_offset = 0;
    bool frame = false;
    std::string text;
  };

  void read_loop(Stream& stream, BoundedQueue<Inbound>& queue) {
    using Status = protocol::DecodeResult::Status;
    protocol::StreamDecoder decoder;
    std::vector<std::uint8_t> buf(1 << 16);
    std::uint64_t decoded = 0;
    try {
      for (;;) {
        const auto n = stream.read_some(buf);
        if (n == 0) break;
        bytes_in_.fetch_add(n);
        decoder.feed(std::span<const std::uint8_t>(buf).first(n));
        for (;;) {
          auto r = decoder.next();
          if (r.status == Status::kIncomplete) break;
          Inbound in;
          if (r.status == Status::kBadMagic) {
            in.kind = Inbound::kStreamError;
            in.text = "bad frame magic; stream out of sync";
            queue.push(std::move(in));
            queue.close();
            return;
          }
          decoded += r.consumed;
          in.stream_offset = decoded;
          in.tag = r.tag;
          if (r.status == Status::kUnknownTag) in.kind = Inbound::kUnknownTag;
          if (r.status == Status::kMalformed) in.kind = Inbound::kMalformed;
          if (r.message) {
            in.frame = std::holds_alternative<protocol::FrameCapture>(*r.message);
            in.message = std::move(r.message);
          }
          if (in.frame) {
            frames_received_.fetch_add(1);
            const auto depth = queued_frames_.fetch_add(1) + 1;
            auto prev = backlog_max_.load();
            while (depth > prev && !backlog_max_.compare_exchange_weak(prev, depth)) {
            }
          }
          if (!queue.push(std::move(in))) return;
        }
      }
    } catch (const TransportError& e) {
      Inbound in;
      in.kind = Inbound::kStreamError;
      in.text = e.what();
      queue.push(std::move(in));
    }
    queue.close();
  }

  void send(Stream& stream, const protocol::WireMessage& m) {
    const auto bytes = protocol::encode(m);
    stream.write_all(bytes);
    bytes_out_.fetch_add(bytes.size());
  }

  void send_error(Stream& stream, SessionReport& report, protocol::ErrorCode code,
                  const std::string& text) {
    protocol::ProtocolError e{static_cast<std::uint16_t>(code), text};
    log::info("protocol error sent: " + text);
    report.errors_sent.push_back(e);
    send(stream, e);
  }

  void handle(Inbound& in, Stream& stream, SessionReport& report) {
    using protocol::ErrorCode;
    if (in.kind == Inbound::kUnknownTag) {
      send_error(stream, report, ErrorCode::kUnknownTag, "unknown message tag " + std::to_string(in.tag));
      return;
    }
    if (in.kind == Inbound::kMalformed) {
      send_error(stream, report, ErrorCode::kMalformed, "malformed payload for tag " + std::to_string(in.tag));
      return;
    }
    std::visit(
        [&](auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, protocol::MeshUpload>) {
            on_mesh(m, stream, report);
          } else if constexpr (std::is_same_v<T, protocol::FrameCapture>) {
            on_frame(m, in.stream_offset, stream, report);
          } else if constexpr (std::is_same_v<T, protocol::Selection>) {
            on_selection(m, stream, report);
          } else if constexpr (std::is_same_v<T, protocol::ProtocolError>) {
            log::warn("client reported protocol error " + std::to_string(m.code) + ": " + m.text);
          } else {
            send_error(stream, report, ErrorCode::kUnexpectedMessage, "message not accepted by the server");
          }
        },
        *in.message);
  }

  void on_mesh(protocol::MeshUpload& m, Stream& stream, SessionReport& report) {
    if (phase_.load() != Phase::kScanning) {
      send_error(stream, report, protocol::ErrorCode::kMeshAlreadyFixed, "mesh already fixed");
      return;
    }
    SemanticMesh mesh;
    mesh.vertices = std::move(m.vertices);
    mesh.triangles = std::move(m.triangles);
    try {
      fusion_ = init_state(std::move(mesh), segmenter_.class_set(), config_.fusion);
    } catch (const Error& e) {
      send_error(stream, report, protocol::ErrorCode::kMalformed, e.what());
      return;
    }
    phase_.store(Phase::kMeshReceived);
    log::info("mesh received: " + std::to_string(fusion_->mesh.vertex_count()) + " vertices, " +
              std::to_string(fusion_->mesh.triangles.size()) + " triangles");
    send(stream, protocol::Ack{0});
  }

  void on_frame(const protocol::FrameCapture& m, std::uint64_t offset, Stream& stream,
                SessionReport& report) {
    if (phase_.load() == Phase::kScanning) {
      send_error(stream, report, protocol::ErrorCode::kMeshFirst, "mesh-first");
      return;
    }
    FrameMetric metric;
    metric.frame_index = m.frame_index;
    metric.bytes_in = offset;
    metric.backlog_depth = queued_frames_.load();
    try {
      const CameraFrame frame(static_cast<int>(m.width), static_cast<int>(m.height), m.camera_to_world,
                              m.projection, m.frame_index);
      const auto t0 = std::chrono::steady_clock::now();
      const auto scores = segmenter_.segment(frame, m.bgra);
      metric.fuse = fuse_frame(*fusion_, frame, scores);
      metric.fuse_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    } catch (const Error& e) {
      send_error(stream, report, protocol::ErrorCode::kInvalidFrame,
                 std::string(e.module()) + ": " + e.what());
      return;
    }
    phase_.store(Phase::kStreaming);
    frames_fused_.fetch_add(1);
    report.frames.push_back(metric);
    log::debug("fused frame " + std::to_string(m.frame_index) + " in " + std::to_string(metric.fuse_ms) + " ms");
    send(stream, protocol::Ack{static_cast<std::uint32_t>(m.frame_index)});

    if (batch_trigger(frames_since_batch_.fetch_add(1) + 1, config_.batch_size)) {
      frames_since_batch_.store(0);
      BatchRecord batch;
      batch.batch_id = static_cast<std::uint32_t>(batches_sent_.load());
      batch.frames_fused = frames_fused_.load();
      batch.components = filter_components(
          extract_components(fusion_->mesh, argmax_labels(*fusion_), fusion_->class_set), config_.thresholds);
      send(stream, to_wire(batch.batch_id, batch.components));
      batches_sent_.fetch_add(1);
      log::info("sent component batch " + std::to_string(batch.batch_id) + " with " +
                std::to_string(batch.components.size()) + " components");
      if (on_batch) on_batch(batch);
      report.batches.push_back(std::move(batch));
    }
  }

  void on_selection(const protocol::Selection& m, Stream& stream, SessionReport& report) {
    const auto action = handle_selection(SelectionEvent{m.point, m.class_name}, report.actuator, config_.hook);
    const auto line = format_action(action, utc_timestamp());
    log::info("action: " + line);
    report.actions.push_back(action);
    if (on_action) on_action(action, line);
    send(stream, protocol::Ack{static_cast<std::uint32_t>(report.actions.size())});
  }

  ServerConfig config_;
  const SegmentationSource& segmenter_;
  std::optional<FusionState> fusion_;

  std::atomic<Phase> phase_{Phase::kScanning};
  std::atomic<std::uint64_t> frames_received_{0};
  std::atomic<std::uint64_t> frames_fused_{0};
  std::atomic<std::uint64_t> frames_since_batch_{0};
  std::atomic<std::uint64_t> bytes_in_{0};
  std::atomic<std::uint64_t> bytes_out_{0};
  std::atomic<std::size_t> queued_frames_{0};
  std::atomic<std::size_t> backlog_max_{0};
  std::atomic<std::uint64_t> batches_sent_{0};
};

// ---------------------------------------------------------------------------
// Client

struct ClientConfig {
  double pacing = 0.0;  // device frames between photos; 0 captures as fast as possible
  double device_fps = 60.0;
  double throttle_bytes_per_sec = 0.0;  // 0 leaves the link unthrottled
  std::size_t capture_queue_bound = 256;
  bool send_mesh = true;
  // Device frames spent scanning before the mesh goes out.
  double mesh_delay_frames = 0.0;
  // Must match the server's; the selection script waits for the batch owed.
  std::size_t batch_size = 5;
  // Run the selection script once this many frames are fused; unset means
  // after the last frame.
  std::optional<std::size_t> select_after;
};

using ImageSource = std::function<std::vector<std::uint8_t>(const CameraFrame&)>;
// Receives the most recent component batch; returns the Selection to send.
using SelectionScript =
    std::function<std::optional<protocol::Selection>(const std::vector<LabeledComponent>&)>;

struct ClientReport {
  std::uint64_t frames_sent = 0;
  std::uint64_t frames_answered = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  double seconds = 0.0;
  // Per captured image: earlier images not yet fused by the server.
  std::vector<std::size_t> backlog;
  std::size_t backlog_max = 0;
  std::vector<protocol::ComponentBatch> batches;
  std::vector<protocol::ProtocolError> errors;
  std::optional<protocol::Selection> selection;
  bool selection_acked = false;
  bool aborted = false;
  std::string abort_reason;

  double send_rate() const { return seconds > 0 ? static_cast<double>(bytes_sent) / seconds : 0.0; }
};

// Solid BGRA image colored by ground-truth label, for a labeled scene.
inline std::vector<std::uint8_t> label_color_image(const SemanticMesh& scene, const CameraFrame& frame,
                                                   std::uint8_t unknown) {
  static constexpr std::uint8_t palette[][3] = {{40, 200, 240}, {60, 60, 220}, {160, 160, 160}, {90, 200, 90}};
  const auto labels = render_label_image(scene, frame, unknown);
  std::vector<std::uint8_t> out(labels.size() * 4, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kUncoveredLabel) continue;
    const auto& c = palette[labels[i] % 4];
    out[4 * i + 0] = c[0];
    out[4 * i + 1] = c[1];
    out[4 * i + 2] = c[2];
    out[4 * i + 3] = 255;
  }
  return out;
}

class ReplayClient {
 public:
  ReplayClient(ClientConfig config, SemanticMesh mesh, std::vector<CameraFrame> frames, ImageSource images)
      : config_(std::move(config)), mesh_(std::move(mesh)), frames_(std::move(frames)), images_(std::move(images)) {
    if (config_.pacing < 0 || !(config_.device_fps > 0)) throw ParameterError("session", "invalid pacing");
    if (!images_) throw ParameterError("session", "replay client needs an image source");
  }

  SelectionScript selection_script;

  ClientReport run(Stream& stream) {
    std::optional<ThrottledStream> throttled;
    if (config_.throttle_bytes_per_sec > 0) throttled.emplace(stream, config_.throttle_bytes_per_sec);
    Stream& out = throttled ? static_cast<Stream&>(*throttled) : stream;

    report_ = ClientReport{};
    frames_fused_ = 0;
    const auto start = std::chrono::steady_clock::now();
    std::thread receiver([&] { receive_loop(stream); });
    BoundedQueue<protocol::FrameCapture> captured(config_.capture_queue_bound);
    std::thread capture;
    const std::size_t select_after = config_.select_after.value_or(frames_.size());

    try {
      if (config_.mesh_delay_frames > 0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(config_.mesh_delay_frames / config_.device_fps));
      }
      if (config_.send_mesh) send(out, protocol::MeshUpload{mesh_.vertices, mesh_.triangles}, Expect::kMesh);
      capture = std::thread([&] { capture_loop(captured); });
      if (select_after == 0) run_selection(out);
      std::size_t sent = 0;
      while (auto f = captured.pop()) {
        send(out, *f, Expect::kFrame);
        {
          std::lock_guard lock(mutex_);
          ++report_.frames_sent;
        }
        if (++sent == select_after) run_selection(out);
      }
      wait_for([&] { return expected_.empty(); });
    } catch (const std::exception& e) {
      abort(e.what());
    }
    {
      std::lock_guard lock(mutex_);
      stop_ = true;
    }
    cv_.notify_all();
    captured.close_and_clear();
    if (capture.joinable()) capture.join();
    if (report_.aborted) {
      stream.shutdown_both();
    } else {
      stream.shutdown_write();
    }
    receiver.join();
    std::lock_guard lock(mutex_);
    if (!report_.aborted && !expected_.empty()) {
      report_.aborted = true;
      report_.abort_reason = "connection closed with replies outstanding";
    }
    report_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report_;
  }

 private:
  enum class Expect { kMesh, kFrame, kSelection };

  void abort(const std::string& why) {
    std::lock_guard lock(mutex_);
    if (!report_.aborted) {
      report_.aborted = true;
      report_.abort_reason = why;
      log::warn("replay aborted: " + why);
    }
    stop_ = true;
    cv_.notify_all();
  }

  template <typename Pred>
  void wait_for(Pred pred) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return pred() || eof_ || stop_; });
  }

  void send(Stream& out, const protocol::WireMessage& m, Expect expect) {
    const auto bytes = protocol::encode(m);
    {
      std::lock_guard lock(mutex_);
      if (stop_) throw TransportError("session stopped");
      expected_.push_back(expect);
    }
    out.write_all(bytes);
    std::lock_guard lock(mutex_);
    report_.bytes_sent += bytes.size();
  }

  void run_selection(Stream& out) {
    if (!selection_script) return;
    // A batch trails the Ack of the frame that completed it.
    wait_for([&] {
      return std::count(expected_.begin(), expected_.end(), Expect::kFrame) == 0 &&
             report_.batches.size() >= frames_fused_ / std::max<std::size_t>(config_.batch_size, 1);
    });
    std::vector<LabeledComponent> latest;
    {
      std::lock_guard lock(mutex_);
      if (!report_.batches.empty()) latest = from_wire(report_.batches.back());
    }
    auto selection = selection_script(latest);
    if (!selection) return;
    {
      std::lock_guard lock(mutex_);
      report_.selection = selection;
    }
    send(out, *selection, Expect::kSelection);
    wait_for([&] { return std::count(expected_.begin(), expected_.end(), Expect::kSelection) == 0; });
  }

  void capture_loop(BoundedQueue<protocol::FrameCapture>& captured) {
    try {
      capture_frames(captured);
    } catch (const std::exception& e) {
      abort(std::string("capture failed: ") + e.what());
    }
    captured.close();
  }

  void capture_frames(BoundedQueue<protocol::FrameCapture>& captured) {
    const auto t0 = std::chrono::steady_clock::now();
    const double interval = config_.pacing / config_.device_fps;
    for (std::size_t k = 0; k < frames_.size(); ++k) {
      {
        std::unique_lock lock(mutex_);
        const auto due = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(interval * static_cast<double>(k)));
        cv_.wait_until(lock, due, [&] { return stop_; });
        if (stop_) break;
        const auto waiting = static_cast<std::size_t>(k - report_.frames_answered);
        report_.backlog.push_back(waiting);
        report_.backlog_max = std::max(report_.backlog_max, waiting);
      }
      const auto& f = frames_[k];
      protocol::FrameCapture m;
      m.frame_index = f.frame_index();
      m.width = static_cast<std::uint32_t>(f.width());
      m.height = static_cast<std::uint32_t>(f.height());
      m.bgra = images_(f);
      m.camera_to_world = f.camera_to_world();
      m.projection = f.projection();
      if (!captured.push(std::move(m))) break;
    }
  }

  void receive_loop(Stream& stream) {
    using Status = protocol::DecodeResult::Status;
    protocol::StreamDecoder decoder;
    std::vector<std::uint8_t> buf(1 << 16);
    try {
      for (;;) {
        const auto n = stream.read_some(buf);
        if (n == 0) break;
        decoder.feed(std::span<const std::uint8_t>(buf).first(n));
        std::lock_guard lock(mutex_);
        report_.bytes_received += n;
        for (auto r = decoder.next(); r.status != Status::kIncomplete; r = decoder.next()) {
          if (r.status == Status::kBadMagic) throw TransportError("bad frame magic from server");
          if (!r.message) {
            log::warn("skipping undecodable server frame with tag " + std::to_string(r.tag));
            continue;
          }
          on_message(*r.message);
        }
        cv_.notify_all();
      }
    } catch (const TransportError& e) {
      abort(e.what());
    }
    std::lock_guard lock(mutex_);
    eof_ = true;
    cv_.notify_all();
  }

  // Called with mutex_ held.
  void on_message(const protocol::WireMessage& m) {
    if (const auto* batch = std::get_if<protocol::ComponentBatch>(&m)) {
      report_.batches.push_back(*batch);
      return;
    }
    const auto* ack = std::get_if<protocol::Ack>(&m);
    const auto* err = std::get_if<protocol::ProtocolError>(&m);
    if (!ack && !err) return;
    if (err) {
      log::warn("server error " + std::to_string(err->code) + ": " + err->text);
      report_.errors.push_back(*err);
    }
    if (expected_.empty()) return;
    const auto kind = expected_.front();
    expected_.pop_front();
    if (kind == Expect::kFrame) {
      ++report_.frames_answered;
      if (ack) ++frames_fused_;
    }
    if (kind == Expect::kSelection) report_.selection_acked = ack != nullptr;
  }

  ClientConfig config_;
  SemanticMesh mesh_;
  std::vector<CameraFrame> frames_;
  ImageSource images_;

  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Expect> expected_;
  ClientReport report_;
  std::size_t frames_fused_ = 0;
  bool eof_ = false;
  bool stop_ = false;
};

}  // namespace semfuse
