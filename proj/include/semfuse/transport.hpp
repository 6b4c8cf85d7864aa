#pragma once

// Byte-stream transport: POSIX TCP sockets, a bandwidth-throttle shim and a
// bounded blocking queue.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <deque>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>

#include "semfuse/error.hpp"

namespace semfuse {

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what) : Error("transport", what) {}
};

class Stream {
 public:
  virtual ~Stream() = default;
  // Blocks until at least one byte is available; returns 0 at end of stream.
  virtual std::size_t read_some(std::span<std::uint8_t> buffer) = 0;
  virtual void write_all(std::span<const std::uint8_t> bytes) = 0;
  virtual void shutdown_write() = 0;
  // Unblocks pending reads and writes on both halves.
  virtual void shutdown_both() = 0;
};

class TcpStream : public Stream {
 public:
  explicit TcpStream(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;
  TcpStream(TcpStream&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  TcpStream& operator=(TcpStream&&) = delete;
  ~TcpStream() override {
    if (fd_ >= 0) ::close(fd_);
  }

  std::size_t read_some(std::span<std::uint8_t> buffer) override {
    for (;;) {
      const auto n = ::recv(fd_, buffer.data(), buffer.size(), 0);
      if (n >= 0) return static_cast<std::size_t>(n);
      if (errno == EINTR) continue;
      throw TransportError(std::string("recv failed: ") + std::strerror(errno));
    }
  }

  void write_all(std::span<const std::uint8_t> bytes) override {
    std::size_t off = 0;
    while (off < bytes.size()) {
      const auto n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("send failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  void shutdown_write() override { ::shutdown(fd_, SHUT_WR); }
  void shutdown_both() override { ::shutdown(fd_, SHUT_RDWR); }

 private:
  int fd_;
};

class TcpListener {
 public:
  // Port 0 binds an ephemeral port; see port().
  explicit TcpListener(int port, const std::string& host = "127.0.0.1") {
    if (port < 0 || port > 65535) throw TransportError("port out of range: " + std::to_string(port));
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw TransportError(std::string("socket failed: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      ::close(fd_);
      throw TransportError("invalid listen address '" + host + "'");
    }
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 || ::listen(fd_, 1) < 0) {
      const std::string why = std::strerror(errno);
      ::close(fd_);
      throw TransportError("cannot listen on " + host + ":" + std::to_string(port) + ": " + why);
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  ~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
  }

  int port() const noexcept { return port_; }

  TcpStream accept() {
    for (;;) {
      const int c = ::accept(fd_, nullptr, nullptr);
      if (c >= 0) return TcpStream(c);
      if (errno == EINTR) continue;
      throw TransportError(std::string("accept failed: ") + std::strerror(errno));
    }
  }

 private:
  int fd_ = -1;
  int port_ = 0;
};

inline TcpStream connect_tcp(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const auto service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw TransportError("cannot resolve '" + host + "': " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (auto* p = res; p; p = p->ai_next) {
    fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw TransportError("cannot connect to " + host + ":" + service);
  return TcpStream(fd);
}

// Limits the write rate of an inner stream. Bytes leave in small chunks, each
// released when the previous chunk's transmission time has elapsed, so an
// idle link does not bank credit beyond one chunk.
class ThrottledStream : public Stream {
 public:
  using Clock = std::chrono::steady_clock;
  static constexpr std::size_t kChunk = 16 * 1024;

  ThrottledStream(Stream& inner, double bytes_per_second) : inner_(inner), rate_(bytes_per_second) {
    if (!(bytes_per_second > 0.0)) throw ParameterError("transport", "throttle rate must be positive");
  }

  std::size_t read_some(std::span<std::uint8_t> buffer) override { return inner_.read_some(buffer); }

  void write_all(std::span<const std::uint8_t> bytes) override {
    while (!bytes.empty()) {
      const auto n = std::min(bytes.size(), kChunk);
      const auto now = Clock::now();
      if (next_ < now) next_ = now;
      std::this_thread::sleep_until(next_);
      inner_.write_all(bytes.first(n));
      next_ += std::chrono::duration_cast<Clock::duration>(
          std::chrono::duration<double>(static_cast<double>(n) / rate_));
      bytes = bytes.subspan(n);
    }
  }

  void shutdown_write() override { inner_.shutdown_write(); }
  void shutdown_both() override { inner_.shutdown_both(); }

 private:
  Stream& inner_;
  double rate_;
  Clock::time_point next_{};
};

template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t bound) : bound_(bound) {
    if (bound == 0) throw ParameterError("transport", "queue bound must be positive");
  }

  // Blocks while full. Returns false if the queue was closed.
  bool push(T value) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < bound_; });
    if (closed_) return false;
    items_.push_back(std::move(value));
    not_empty_.notify_one();
    return true;
  }

  // Blocks while empty; nullopt once closed and drained.
  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return v;
  }

  // Producers stop; consumers drain what is left.
  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  void close_and_clear() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    items_.clear();
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }

 private:
  std::size_t bound_;
  mutable std::mutex mutex_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  bool closed_ = false;
};

}  // namespace semfuse
