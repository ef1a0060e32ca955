#include "nbsim/link.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>

namespace nbsim::net {

namespace {

struct Queue {
  std::mutex mutex;
  std::condition_variable ready;
  std::deque<Bytes> frames;
};

class InProcessEndpoint final : public Endpoint {
 public:
  InProcessEndpoint(std::shared_ptr<Queue> inbox, std::shared_ptr<Queue> outbox)
      : inbox_(std::move(inbox)), outbox_(std::move(outbox)) {}

  void send(std::span<const std::uint8_t> frame) override {
    {
      std::lock_guard lock(outbox_->mutex);
      outbox_->frames.emplace_back(frame.begin(), frame.end());
    }
    outbox_->ready.notify_one();
  }

  std::optional<Bytes> receive(std::chrono::milliseconds timeout) override {
    std::unique_lock lock(inbox_->mutex);
    if (!inbox_->ready.wait_for(lock, timeout, [&] { return !inbox_->frames.empty(); })) return std::nullopt;
    Bytes frame = std::move(inbox_->frames.front());
    inbox_->frames.pop_front();
    return frame;
  }

 private:
  std::shared_ptr<Queue> inbox_;
  std::shared_ptr<Queue> outbox_;
};

class UdpEndpoint final : public Endpoint {
 public:
  UdpEndpoint(std::uint16_t local_port, std::uint16_t peer_port, std::set<std::size_t> drops)
      : drops_(std::move(drops)) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw Error(std::string("socket: ") + std::strerror(errno));
    sockaddr_in local = address(local_port);
    if (::bind(fd_, reinterpret_cast<const sockaddr*>(&local), sizeof local) != 0) {
      int err = errno;
      ::close(fd_);
      throw Error("bind failure on 127.0.0.1:" + std::to_string(local_port) + ": " + std::strerror(err));
    }
    peer_ = address(peer_port);
  }

  ~UdpEndpoint() override { ::close(fd_); }

  UdpEndpoint(const UdpEndpoint&) = delete;
  UdpEndpoint& operator=(const UdpEndpoint&) = delete;

  void send(std::span<const std::uint8_t> frame) override {
    if (drops_.count(++sent_) != 0) return;
    auto n = ::sendto(fd_, frame.data(), frame.size(), 0, reinterpret_cast<const sockaddr*>(&peer_), sizeof peer_);
    if (n < 0) throw Error(std::string("sendto: ") + std::strerror(errno));
  }

  std::optional<Bytes> receive(std::chrono::milliseconds timeout) override {
    pollfd p{fd_, POLLIN, 0};
    int ready = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (ready <= 0) return std::nullopt;
    Bytes buf(65536 + 16);
    auto n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n < 0) return std::nullopt;
    buf.resize(static_cast<std::size_t>(n));
    return buf;
  }

 private:
  static sockaddr_in address(std::uint16_t port) {
    sockaddr_in a{};
    a.sin_family = AF_INET;
    a.sin_port = htons(port);
    a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    return a;
  }

  int fd_ = -1;
  sockaddr_in peer_{};
  std::set<std::size_t> drops_;
  std::size_t sent_ = 0;
};

}  // namespace

LinkPair open_link(const LinkMode& mode) {
  if (mode.kind == LinkMode::Kind::inprocess) {
    auto to_pnf = std::make_shared<Queue>();
    auto to_vnf = std::make_shared<Queue>();
    return LinkPair{std::make_unique<InProcessEndpoint>(to_pnf, to_vnf),
                    std::make_unique<InProcessEndpoint>(to_vnf, to_pnf)};
  }
  return LinkPair{open_udp_endpoint(Role::pnf, mode.port, mode.drop_frames),
                  open_udp_endpoint(Role::vnf, mode.port, mode.drop_frames)};
}

std::unique_ptr<Endpoint> open_udp_endpoint(Role role, std::uint16_t port, std::set<std::size_t> drop_frames) {
  if (port == 0 || port == 65535) throw Error("loopback port must be in 1..65534");
  const std::uint16_t pnf_port = port;
  const std::uint16_t vnf_port = static_cast<std::uint16_t>(port + 1);
  return role == Role::pnf ? std::make_unique<UdpEndpoint>(pnf_port, vnf_port, std::move(drop_frames))
                           : std::make_unique<UdpEndpoint>(vnf_port, pnf_port, std::move(drop_frames));
}

}  // namespace nbsim::net
