#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>

#include "nbsim/bytes.hpp"

// Two-party datagram channels used for the PNF/VNF split and for S1.
namespace nbsim::net {

/// One side of a two-party channel. Frames arrive in FIFO order, each at most
/// once. An endpoint has a single owner at a time.
class Endpoint {
 public:
  virtual ~Endpoint() = default;

  virtual void send(std::span<const std::uint8_t> frame) = 0;
  /// Waits up to `timeout` (zero polls) for the next frame.
  virtual std::optional<Bytes> receive(std::chrono::milliseconds timeout = std::chrono::milliseconds{0}) = 0;
};

struct LinkMode {
  enum class Kind { inprocess, loopback };

  Kind kind = Kind::inprocess;
  /// Loopback: the PNF binds `port`, the VNF binds `port + 1`, both on 127.0.0.1.
  std::uint16_t port = 0;
  /// 1-based indices of frames (counted per sending endpoint) to drop on send.
  std::set<std::size_t> drop_frames;

  static LinkMode inprocess() { return {}; }
  static LinkMode loopback(std::uint16_t port, std::set<std::size_t> drops = {}) {
    return LinkMode{Kind::loopback, port, std::move(drops)};
  }
};

struct LinkPair {
  std::unique_ptr<Endpoint> pnf;
  std::unique_ptr<Endpoint> vnf;
};

/// Throws nbsim::Error when a loopback port cannot be bound.
LinkPair open_link(const LinkMode& mode);

enum class Role { pnf, vnf };

/// A single loopback endpoint, for running the two sides in separate processes.
std::unique_ptr<Endpoint> open_udp_endpoint(Role role, std::uint16_t port, std::set<std::size_t> drop_frames = {});

}  // namespace nbsim::net
