#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "nbsim/bytes.hpp"

// EMM/ESM messages between UE and MME. Security is null: messages travel in
// the clear and SecurityModeComplete only flips a flag on both ends.
namespace nbsim::nas {

inline constexpr std::size_t kMaxUserPayload = 1500;

using Key = std::array<std::uint8_t, 16>;
using Rand = std::array<std::uint8_t, 16>;
using Res = std::array<std::uint8_t, 8>;

enum class PcoType : std::uint8_t { pco = 0, epco = 1 };

struct AttachRequest {
  std::string imsi;
  PcoType pco = PcoType::pco;
  bool operator==(const AttachRequest&) const = default;
};
struct IdentityRequest {
  bool operator==(const IdentityRequest&) const = default;
};
struct IdentityResponse {
  std::string imsi;
  bool operator==(const IdentityResponse&) const = default;
};
struct AuthenticationRequest {
  Rand rand{};
  bool operator==(const AuthenticationRequest&) const = default;
};
struct AuthenticationResponse {
  Res res{};
  bool operator==(const AuthenticationResponse&) const = default;
};
struct AuthenticationReject {
  bool operator==(const AuthenticationReject&) const = default;
};
struct SecurityModeCommand {
  bool operator==(const SecurityModeCommand&) const = default;
};
struct SecurityModeComplete {
  bool operator==(const SecurityModeComplete&) const = default;
};
struct AttachAccept {
  std::string ip;  // dotted quad
  bool operator==(const AttachAccept&) const = default;
};
struct AttachComplete {
  bool operator==(const AttachComplete&) const = default;
};
/// User datagram carried over the control plane.
struct EsmDataTransport {
  std::string dest_ip;
  std::uint16_t dest_port = 0;
  Bytes payload;
  bool operator==(const EsmDataTransport&) const = default;
};

using NasPdu = std::variant<AttachRequest, IdentityRequest, IdentityResponse, AuthenticationRequest,
                            AuthenticationResponse, AuthenticationReject, SecurityModeCommand, SecurityModeComplete,
                            AttachAccept, AttachComplete, EsmDataTransport>;

Bytes encode(const NasPdu& pdu);
NasPdu decode(std::span<const std::uint8_t> bytes);
std::string_view name_of(const NasPdu& pdu);

/// Toy stand-in for EPS-AKA: the first 8 bytes of k XOR rand.
Res auth_res(const Key& k, const Rand& rand);

/// "a.b.c.d" -> host-order u32; nullopt when malformed.
std::optional<std::uint32_t> parse_ipv4(std::string_view text);
std::string format_ipv4(std::uint32_t addr);

/// IMSI: 6..15 decimal digits.
bool valid_imsi(std::string_view imsi);

}  // namespace nbsim::nas
