#pragma once

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <system_error>
#include <utility>

#include "seatrot/wire_protocol.hpp"

namespace seatrot::net {

[[noreturn]] inline void throw_errno(const std::string& what) {
  throw std::system_error(errno, std::generic_category(), what);
}

/// Owning file descriptor.
class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Fd() { reset(); }

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

inline sockaddr_in resolve_ipv4(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (host.empty() || host == "0.0.0.0") {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    return addr;
  }
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res) {
    throw std::runtime_error("cannot resolve host " + host);
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

inline std::uint16_t local_port(int fd) {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    throw_errno("getsockname");
  }
  return ntohs(addr.sin_port);
}

inline void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  if (flags < 0 || ::fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0) throw_errno("fcntl");
}

class UdpSocket {
 public:
  UdpSocket() : fd_(::socket(AF_INET, SOCK_DGRAM, 0)) {
    if (!fd_.valid()) throw_errno("socket(udp)");
  }

  void bind(const std::string& host, std::uint16_t port) {
    const int one = 1;
    ::setsockopt(fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const auto addr = resolve_ipv4(host, port);
    if (::bind(fd_.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
      throw_errno("bind udp " + host + ":" + std::to_string(port));
    }
  }

  void set_receive_buffer(int bytes) {
    ::setsockopt(fd_.get(), SOL_SOCKET, SO_RCVBUF, &bytes, sizeof bytes);
  }

  // Asks the kernel to report datagrams it discarded because the receive
  // buffer was full.
  void enable_drop_counter() {
    const int one = 1;
    ::setsockopt(fd_.get(), SOL_SOCKET, SO_RXQ_OVFL, &one, sizeof one);
  }

  void send_to(ByteView data, const sockaddr_in& to) {
    // Datagram loss is tolerated by design; a full send buffer drops the packet.
    ::sendto(fd_.get(), data.data(), data.size(), MSG_DONTWAIT,
             reinterpret_cast<const sockaddr*>(&to), sizeof to);
  }

  /// Receives one datagram without blocking. Returns nullopt when none is queued.
  std::optional<Bytes> try_receive() {
    Bytes buf(2048);
    iovec iov{buf.data(), buf.size()};
    alignas(cmsghdr) char control[CMSG_SPACE(sizeof(std::uint32_t))];
    msghdr msg{};
    msg.msg_iov = &iov;
    msg.msg_iovlen = 1;
    msg.msg_control = control;
    msg.msg_controllen = sizeof control;
    const auto n = ::recvmsg(fd_.get(), &msg, MSG_DONTWAIT);
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) return std::nullopt;
      throw_errno("recv udp");
    }
    for (cmsghdr* c = CMSG_FIRSTHDR(&msg); c; c = CMSG_NXTHDR(&msg, c)) {
      if (c->cmsg_level == SOL_SOCKET && c->cmsg_type == SO_RXQ_OVFL) {
        std::memcpy(&kernel_drops_, CMSG_DATA(c), sizeof kernel_drops_);
      }
    }
    buf.resize(static_cast<std::size_t>(n));
    return buf;
  }

  std::uint16_t port() const { return local_port(fd_.get()); }
  int fd() const { return fd_.get(); }
  // Cumulative count; only meaningful after enable_drop_counter().
  std::uint32_t kernel_drops() const { return kernel_drops_; }

 private:
  Fd fd_;
  std::uint32_t kernel_drops_ = 0;
};

class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(Fd fd) : fd_(std::move(fd)) {}

  static TcpStream connect(const std::string& host, std::uint16_t port) {
    Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!fd.valid()) throw_errno("socket(tcp)");
    const auto addr = resolve_ipv4(host, port);
    if (::connect(fd.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
      throw_errno("connect " + host + ":" + std::to_string(port));
    }
    const int one = 1;
    ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return TcpStream(std::move(fd));
  }

  /// Writes everything or throws.
  void send_all(ByteView data) {
    std::size_t off = 0;
    while (off < data.size()) {
      const auto n = ::send(fd_.get(), data.data() + off, data.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK) {
          wait_writable();
          continue;
        }
        throw_errno("send tcp");
      }
      off += static_cast<std::size_t>(n);
    }
  }

  /// Reads what is available. Returns 0 on orderly close, -1 when it would block.
  long receive_some(Bytes& into) {
    std::uint8_t buf[4096];
    const auto n = ::recv(fd_.get(), buf, sizeof buf, 0);
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) return -1;
      throw_errno("recv tcp");
    }
    into.insert(into.end(), buf, buf + n);
    return static_cast<long>(n);
  }

  void set_receive_timeout_ms(int ms) {
    timeval tv{ms / 1000, (ms % 1000) * 1000};
    ::setsockopt(fd_.get(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  }

  void set_nonblocking() { net::set_nonblocking(fd_.get()); }
  int fd() const { return fd_.get(); }
  bool valid() const { return fd_.valid(); }
  void close() { fd_.reset(); }

 private:
  void wait_writable() {
    pollfd p{fd_.get(), POLLOUT, 0};
    ::poll(&p, 1, 100);
  }
  Fd fd_;
};

class TcpListener {
 public:
  void listen(const std::string& host, std::uint16_t port) {
    fd_ = Fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!fd_.valid()) throw_errno("socket(tcp)");
    const int one = 1;
    ::setsockopt(fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const auto addr = resolve_ipv4(host, port);
    if (::bind(fd_.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
      throw_errno("bind tcp " + host + ":" + std::to_string(port));
    }
    if (::listen(fd_.get(), 8) != 0) throw_errno("listen");
    set_nonblocking(fd_.get());
  }

  std::optional<TcpStream> try_accept() {
    Fd fd(::accept(fd_.get(), nullptr, nullptr));
    if (!fd.valid()) {
      if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR ||
          errno == ECONNABORTED) {
        return std::nullopt;
      }
      throw_errno("accept");
    }
    const int one = 1;
    ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return TcpStream(std::move(fd));
  }

  std::uint16_t port() const { return local_port(fd_.get()); }
  int fd() const { return fd_.get(); }

 private:
  Fd fd_;
};

/// Blocks until one complete bridge frame arrives. Used by clients.
inline std::optional<Bytes> read_frame(TcpStream& s, FrameReader& reader) {
  while (true) {
    if (auto msg = reader.next()) return msg;
    Bytes chunk;
    const long n = s.receive_some(chunk);
    if (n == 0) return std::nullopt;
    if (n < 0) return std::nullopt;  // timeout
    reader.feed(chunk);
  }
}

}  // namespace seatrot::net
