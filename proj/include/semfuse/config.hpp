#pragma once

// Run configuration: every tunable in one flat struct, loadable from a
// UTF-8 key=value file (`#` starts a comment) and overridable per key.

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>

#include "semfuse/components.hpp"
#include "semfuse/error.hpp"

namespace semfuse {

struct RunConfig {
  int width = 896;
  int height = 504;
  double fov_deg = 40.0;
  std::size_t batch_size = 5;
  ThresholdTable thresholds = ThresholdTable::defaults();
  double visibility_tolerance = 0.01;
  double near_skip_m = 2.0;
  double epsilon_floor = 1e-6;
  std::string host = "127.0.0.1";
  int port = 9464;
  std::uint64_t seed = 1;
  double throttle_bytes_per_sec = 0.0;
  double pacing = 0.0;
  double device_fps = 60.0;
  double mesh_delay_frames = 0.0;
  std::size_t queue_bound = 64;
  int frames = 24;
  int chairs = 2;
  int lamps = 1;
  double density = 800.0;
  double orbit_radius = 1.15;
  double eye_height = 1.75;
  double noise = 0.10;
  double concentration = 8.0;
  bool select_lamp = true;
  std::string scene;       // labeled PLY for the oracle segmenter / replay mesh
  std::string trajectory;  // pose file for replay
  std::string smap_dir;    // recorded score maps; replaces the oracle when set
  std::string actuation_command;
  std::string out = "out";
};

namespace detail {

template <typename T>
T parse_number(const std::string& key, std::string_view text) {
  T v{};
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end) {
    throw ConfigError("invalid value '" + std::string(text) + "' for '" + key + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) throw ConfigError("non-finite value for '" + key + "'");
  }
  return v;
}

template <typename T>
void check_range(const std::string& key, T v, T lo, T hi) {
  if (v < lo || v > hi) {
    std::ostringstream os;
    os << "'" << key << "' = " << v << " outside [" << lo << ", " << hi << "]";
    throw ConfigError(os.str());
  }
}

inline std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

}  // namespace detail

// "chair=30,lamp=5"
inline ThresholdTable parse_thresholds(std::string_view text) {
  ThresholdTable t;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    const auto item = detail::trim(text.substr(pos, comma - pos));
    pos = comma + 1;
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("threshold entry '" + item + "' is not class=count");
    const auto name = detail::trim(std::string_view(item).substr(0, eq));
    const auto count = detail::parse_number<long long>("thresholds", detail::trim(std::string_view(item).substr(eq + 1)));
    if (name.empty() || count < 0) throw ConfigError("invalid threshold entry '" + item + "'");
    t.set(name, static_cast<std::size_t>(count));
  }
  if (t.entries().empty()) throw ConfigError("empty threshold table");
  return t;
}

inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  using detail::check_range;
  using detail::parse_number;
  auto real = [&](double& field, double lo, double hi) {
    field = parse_number<double>(key, value);
    check_range(key, field, lo, hi);
  };
  auto integer = [&](int& field, int lo, int hi) {
    field = parse_number<int>(key, value);
    check_range(key, field, lo, hi);
  };
  auto size = [&](std::size_t& field, std::size_t lo, std::size_t hi) {
    field = parse_number<std::size_t>(key, value);
    check_range(key, field, lo, hi);
  };

  if (key == "width") integer(c.width, 1, 16384);
  else if (key == "height") integer(c.height, 1, 16384);
  else if (key == "fov_deg") real(c.fov_deg, 1.0, 179.0);
  else if (key == "batch_size") size(c.batch_size, 1, 1000000);
  else if (key == "thresholds") c.thresholds = parse_thresholds(value);
  else if (key == "visibility_tolerance") real(c.visibility_tolerance, 0.0, 10.0);
  else if (key == "near_skip_m") real(c.near_skip_m, -1.0, 1000.0);
  else if (key == "epsilon_floor") real(c.epsilon_floor, 0.0, 0.01);
  else if (key == "host") c.host = value;
  else if (key == "port") integer(c.port, 0, 65535);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "throttle_bytes_per_sec") real(c.throttle_bytes_per_sec, 0.0, 1e12);
  else if (key == "pacing") real(c.pacing, 0.0, 1e6);
  else if (key == "device_fps") real(c.device_fps, 1e-3, 1e4);
  else if (key == "mesh_delay_frames") real(c.mesh_delay_frames, 0.0, 1e6);
  else if (key == "queue_bound") size(c.queue_bound, 1, 1 << 20);
  else if (key == "frames") integer(c.frames, 0, 1000000);
  else if (key == "chairs") integer(c.chairs, 0, 16);
  else if (key == "lamps") integer(c.lamps, 0, 16);
  else if (key == "density") real(c.density, 1.0, 1e6);
  else if (key == "orbit_radius") real(c.orbit_radius, 0.0, 100.0);
  else if (key == "eye_height") real(c.eye_height, -100.0, 100.0);
  else if (key == "noise") real(c.noise, 0.0, 1.0);
  else if (key == "concentration") {
    // "inf" selects one-hot score maps
    if (value == "inf") c.concentration = std::numeric_limits<double>::infinity();
    else real(c.concentration, 1.0, 1e12);
  }
  else if (key == "select_lamp") {
    if (value == "true" || value == "1") c.select_lamp = true;
    else if (value == "false" || value == "0") c.select_lamp = false;
    else throw ConfigError("invalid boolean '" + value + "' for 'select_lamp'");
  }
  else if (key == "scene") c.scene = value;
  else if (key == "trajectory") c.trajectory = value;
  else if (key == "smap_dir") c.smap_dir = value;
  else if (key == "actuation_command") c.actuation_command = value;
  else if (key == "out") c.out = value;
  else throw ConfigError("unknown configuration key '" + key + "'");
}

inline void apply_config_text(RunConfig& c, std::string_view text, const std::string& origin = "config") {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
    }
    try {
      set_config_value(c, detail::trim(std::string_view(body).substr(0, eq)),
                       detail::trim(std::string_view(body).substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline void apply_config_file(RunConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(c, ss.str(), path);
}

}  // namespace semfuse
