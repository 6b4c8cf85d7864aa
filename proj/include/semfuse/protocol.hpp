#pragma once

// Length-prefixed binary wire format.
//
// Frame layout: "SFU1" | u8 tag | u32 payload length | payload. Integers and
// IEEE-754 doubles are little-endian; strings are u16 length + UTF-8 bytes;
// matrices are 16 doubles in row-major order.
//
//   tag 1 MeshUpload      u32 nv, nv * 3 f64, u32 nt, nt * 3 u32
//   tag 2 FrameCapture    u64 frame_index, u32 width, u32 height,
//                         width*height*4 BGRA bytes, 16 f64 camera_to_world,
//                         16 f64 projection
//   tag 3 ComponentBatch  u32 batch_id, u32 n, n * (str class, u32 nv,
//                         nv * 3 f64, u32 nt, nt * 3 u32)
//   tag 4 Selection       3 f64 world point, str class
//   tag 5 Ack             u32 ref_id
//   tag 6 ProtocolError   u16 code, str text

#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "semfuse/error.hpp"
#include "semfuse/geometry.hpp"

namespace semfuse::protocol {

inline constexpr char kMagic[4] = {'S', 'F', 'U', '1'};
inline constexpr std::size_t kHeaderSize = 9;
inline constexpr std::size_t kMaxPayload = 256u << 20;

enum class Tag : std::uint8_t {
  kMeshUpload = 1,
  kFrameCapture = 2,
  kComponentBatch = 3,
  kSelection = 4,
  kAck = 5,
  kProtocolError = 6,
};

enum class ErrorCode : std::uint16_t {
  kMeshFirst = 1,
  kMeshAlreadyFixed = 2,
  kInvalidFrame = 3,
  kUnknownTag = 4,
  kMalformed = 5,
  kUnexpectedMessage = 6,
};

struct MeshUpload {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  bool operator==(const MeshUpload&) const = default;
};

struct FrameCapture {
  std::uint64_t frame_index = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> bgra;
  Mat4 camera_to_world = Mat4::Identity();
  Mat4 projection = Mat4::Identity();
  bool operator==(const FrameCapture&) const = default;
};

struct ComponentEntry {
  std::string class_name;
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  bool operator==(const ComponentEntry&) const = default;
};

struct ComponentBatch {
  std::uint32_t batch_id = 0;
  std::vector<ComponentEntry> components;
  bool operator==(const ComponentBatch&) const = default;
};

struct Selection {
  Vec3 point = Vec3::Zero();
  std::string class_name;
  bool operator==(const Selection&) const = default;
};

struct Ack {
  std::uint32_t ref_id = 0;
  bool operator==(const Ack&) const = default;
};

struct ProtocolError {
  std::uint16_t code = 0;
  std::string text;
  bool operator==(const ProtocolError&) const = default;
};

using WireMessage =
    std::variant<MeshUpload, FrameCapture, ComponentBatch, Selection, Ack, ProtocolError>;

inline Tag tag_of(const WireMessage& m) { return static_cast<Tag>(m.index() + 1); }

class EncodeError : public Error {
 public:
  explicit EncodeError(const std::string& what) : Error("protocol", what) {}
};

namespace detail {

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  template <typename T>
  void pod(T v) {
    const auto n = out_.size();
    out_.resize(n + sizeof(T));
    std::memcpy(out_.data() + n, &v, sizeof(T));
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { pod(v); }
  void u32(std::uint32_t v) { pod(v); }
  void u64(std::uint64_t v) { pod(v); }
  void f64(double v) { pod(v); }

  void str(const std::string& s) {
    if (s.size() > 0xffff) throw EncodeError("string longer than 65535 bytes");
    u16(static_cast<std::uint16_t>(s.size()));
    bytes({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void count(std::size_t n) {
    if (n > 0xffffffffu) throw EncodeError("element count exceeds u32");
    u32(static_cast<std::uint32_t>(n));
  }
  void matrix(const Mat4& m) {
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) f64(m(r, c));
  }
  void geometry(const std::vector<Vec3>& vertices, const std::vector<Triangle>& triangles) {
    count(vertices.size());
    for (const auto& v : vertices) {
      f64(v.x());
      f64(v.y());
      f64(v.z());
    }
    count(triangles.size());
    for (const auto& t : triangles) {
      u32(t[0]);
      u32(t[1]);
      u32(t[2]);
    }
  }

 private:
  std::vector<std::uint8_t>& out_;
};

struct Malformed {};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::uint8_t u8() { return pod<std::uint8_t>(); }
  std::uint16_t u16() { return pod<std::uint16_t>(); }
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  double f64() { return pod<double>(); }

  std::string str() {
    const auto n = u16();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::vector<std::uint8_t> bytes(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> b(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return b;
  }
  Mat4 matrix() {
    Mat4 m;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) m(r, c) = f64();
    return m;
  }
  void geometry(std::vector<Vec3>& vertices, std::vector<Triangle>& triangles) {
    const auto nv = u32();
    need(static_cast<std::size_t>(nv) * 24);
    vertices.resize(nv);
    for (auto& v : vertices) {
      const double x = f64(), y = f64(), z = f64();
      v = Vec3(x, y, z);
    }
    const auto nt = u32();
    need(static_cast<std::size_t>(nt) * 12);
    triangles.resize(nt);
    for (auto& t : triangles) t = {u32(), u32(), u32()};
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Malformed{};
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

inline void encode_payload(Writer& w, const MeshUpload& m) { w.geometry(m.vertices, m.triangles); }

inline void encode_payload(Writer& w, const FrameCapture& m) {
  if (m.bgra.size() != static_cast<std::size_t>(m.width) * m.height * 4) {
    throw EncodeError("pixel buffer length does not equal width * height * 4");
  }
  w.u64(m.frame_index);
  w.u32(m.width);
  w.u32(m.height);
  w.bytes(m.bgra);
  w.matrix(m.camera_to_world);
  w.matrix(m.projection);
}

inline void encode_payload(Writer& w, const ComponentBatch& m) {
  w.u32(m.batch_id);
  w.count(m.components.size());
  for (const auto& c : m.components) {
    w.str(c.class_name);
    w.geometry(c.vertices, c.triangles);
  }
}

inline void encode_payload(Writer& w, const Selection& m) {
  w.f64(m.point.x());
  w.f64(m.point.y());
  w.f64(m.point.z());
  w.str(m.class_name);
}

inline void encode_payload(Writer& w, const Ack& m) { w.u32(m.ref_id); }

inline void encode_payload(Writer& w, const ProtocolError& m) {
  w.u16(m.code);
  w.str(m.text);
}

inline WireMessage decode_payload(Tag tag, std::span<const std::uint8_t> payload) {
  Reader r(payload);
  WireMessage out;
  switch (tag) {
    case Tag::kMeshUpload: {
      MeshUpload m;
      r.geometry(m.vertices, m.triangles);
      out = std::move(m);
      break;
    }
    case Tag::kFrameCapture: {
      FrameCapture m;
      m.frame_index = r.u64();
      m.width = r.u32();
      m.height = r.u32();
      m.bgra = r.bytes(static_cast<std::size_t>(m.width) * m.height * 4);
      m.camera_to_world = r.matrix();
      m.projection = r.matrix();
      out = std::move(m);
      break;
    }
    case Tag::kComponentBatch: {
      ComponentBatch m;
      m.batch_id = r.u32();
      const auto n = r.u32();
      if (n > payload.size()) throw Malformed{};
      m.components.resize(n);
      for (auto& c : m.components) {
        c.class_name = r.str();
        r.geometry(c.vertices, c.triangles);
      }
      out = std::move(m);
      break;
    }
    case Tag::kSelection: {
      Selection m;
      const double x = r.f64(), y = r.f64(), z = r.f64();
      m.point = Vec3(x, y, z);
      m.class_name = r.str();
      out = std::move(m);
      break;
    }
    case Tag::kAck:
      out = Ack{r.u32()};
      break;
    case Tag::kProtocolError: {
      ProtocolError m;
      m.code = r.u16();
      m.text = r.str();
      out = std::move(m);
      break;
    }
  }
  if (!r.done()) throw Malformed{};
  return out;
}

inline bool known_tag(std::uint8_t t) { return t >= 1 && t <= 6; }

}  // namespace detail

// Appends the encoded frame to `out`; returns the number of bytes appended.
inline std::size_t encode_into(const WireMessage& message, std::vector<std::uint8_t>& out) {
  const auto start = out.size();
  detail::Writer w(out);
  w.bytes({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
  w.u8(static_cast<std::uint8_t>(tag_of(message)));
  w.u32(0);  // patched below
  std::visit([&w](const auto& m) { detail::encode_payload(w, m); }, message);
  const auto payload = out.size() - start - kHeaderSize;
  if (payload > kMaxPayload) {
    out.resize(start);
    throw EncodeError("payload exceeds 256 MiB");
  }
  const auto len = static_cast<std::uint32_t>(payload);
  std::memcpy(out.data() + start + 5, &len, 4);
  return out.size() - start;
}

inline std::vector<std::uint8_t> encode(const WireMessage& message) {
  std::vector<std::uint8_t> out;
  encode_into(message, out);
  return out;
}

struct DecodeResult {
  enum class Status {
    kMessage,     // `message` holds a decoded frame
    kIncomplete,  // need more bytes; nothing consumed
    kUnknownTag,  // frame skipped; `tag` holds the unknown tag
    kMalformed,   // frame skipped; payload did not parse
    kBadMagic,    // unrecoverable: the stream is out of sync
  };
  Status status = Status::kIncomplete;
  std::optional<WireMessage> message;
  std::size_t consumed = 0;
  std::uint8_t tag = 0;
};

inline DecodeResult decode(std::span<const std::uint8_t> bytes) {
  using Status = DecodeResult::Status;
  DecodeResult r;
  if (bytes.empty()) return r;
  const auto magic_len = std::min<std::size_t>(bytes.size(), 4);
  if (std::memcmp(bytes.data(), kMagic, magic_len) != 0) {
    r.status = Status::kBadMagic;
    return r;
  }
  if (bytes.size() < kHeaderSize) return r;
  r.tag = bytes[4];
  std::uint32_t len;
  std::memcpy(&len, bytes.data() + 5, 4);
  if (len > kMaxPayload) {
    r.status = Status::kBadMagic;
    return r;
  }
  if (bytes.size() < kHeaderSize + len) return r;
  r.consumed = kHeaderSize + len;
  if (!detail::known_tag(r.tag)) {
    r.status = Status::kUnknownTag;
    return r;
  }
  try {
    r.message = detail::decode_payload(static_cast<Tag>(r.tag), bytes.subspan(kHeaderSize, len));
    r.status = Status::kMessage;
  } catch (const detail::Malformed&) {
    r.status = Status::kMalformed;
  }
  return r;
}

// Incremental decoder over an arbitrarily chunked byte stream.
class StreamDecoder {
 public:
  void feed(std::span<const std::uint8_t> bytes) { buffer_.insert(buffer_.end(), bytes.begin(), bytes.end()); }

  // Next complete frame (or skip/error outcome); kIncomplete when the buffer
  // holds no complete frame. After kBadMagic the decoder stays broken.
  DecodeResult next() {
    if (broken_) return DecodeResult{DecodeResult::Status::kBadMagic, std::nullopt, 0, 0};
    auto r = decode(std::span<const std::uint8_t>(buffer_).subspan(offset_));
    if (r.status == DecodeResult::Status::kBadMagic) broken_ = true;
    offset_ += r.consumed;
    if (offset_ > (1u << 20) && offset_ * 2 > buffer_.size()) {
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(offset_));
      offset_ = 0;
    }
    return r;
  }

  std::size_t buffered() const noexcept { return buffer_.size() - offset_; }

 private:
  std::vector<std::uint8_t> buffer_;
  std::size_t offset_ = 0;
  bool broken_ = false;
};

}  // namespace semfuse::protocol
