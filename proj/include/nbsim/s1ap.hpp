#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "nbsim/bytes.hpp"

// S1AP subset used by the attach flow. Frames are `type u8 | body_len u16 | body`
// and travel as datagrams over a net::Endpoint rather than SCTP.
namespace nbsim::s1ap {

struct UeIds {
  std::uint32_t mme_ue_id = 0;
  std::uint32_t enb_ue_id = 0;
  bool operator==(const UeIds&) const = default;
};

struct S1SetupRequest {
  std::uint32_t enb_id = 0;
  std::string plmn;
  bool operator==(const S1SetupRequest&) const = default;
};
struct S1SetupResponse {
  std::string mme_name;
  bool operator==(const S1SetupResponse&) const = default;
};
struct InitialUeMessage {
  std::uint32_t enb_ue_id = 0;
  Bytes nas;
  bool operator==(const InitialUeMessage&) const = default;
};
struct DownlinkNasTransport {
  UeIds ids;
  Bytes nas;
  bool operator==(const DownlinkNasTransport&) const = default;
};
struct UplinkNasTransport {
  UeIds ids;
  Bytes nas;
  bool operator==(const UplinkNasTransport&) const = default;
};

using S1apMessage =
    std::variant<S1SetupRequest, S1SetupResponse, InitialUeMessage, DownlinkNasTransport, UplinkNasTransport>;

/// Throws CodecError on an empty NAS container or an oversized string.
Bytes encode(const S1apMessage& msg);
/// Throws CodecError on any malformed frame or empty NAS.
S1apMessage decode(std::span<const std::uint8_t> frame);

/// Wire names as a protocol analyser shows them: "S1SetupRequest",
/// "InitialUEMessage", "DownlinkNASTransport", ...
std::string_view name_of(const S1apMessage& msg);

/// Trace text: wire name, UE ids and the carried NAS message name when decodable.
std::string describe(const S1apMessage& msg);

}  // namespace nbsim::s1ap
