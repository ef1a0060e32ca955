#pragma once

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

#include "nbsim/bytes.hpp"

// PHY <-> MAC messages for the PNF/VNF split. The message set is a reduced,
// P7-like subset and the frame layout is project specific:
//
//   +----------+----------+----------+------+-------+------------------+
//   | msg_type | body_len |   sfn    |  sf  | flags | body (body_len)  |
//   |   u16    |   u16    |   u16    |  u8  |  u8   |                  |
//   +----------+----------+----------+------+-------+------------------+
//
// All integers are big-endian.
namespace nbsim::fapi {

inline constexpr std::size_t kHeaderSize = 8;

enum class MsgType : std::uint16_t {
  subframe_indication = 0x0001,
  dl_config_request = 0x0002,
  ul_config_request = 0x0003,
  rach_indication = 0x0004,
  rx_indication = 0x0005,
  crc_indication = 0x0006,
  harq_indication = 0x0007,
};

struct FrameHeader {
  std::uint16_t msg_type = 0;
  std::uint16_t body_len = 0;
  std::uint16_t sfn = 0;
  std::uint8_t sf = 0;
  std::uint8_t flags = 0;

  bool operator==(const FrameHeader&) const = default;
};

enum class DciFormat : std::uint8_t { n0_ul_grant = 0, n1_dl_assignment = 1 };

/// One NPDCCH transmission starting at the request's subframe.
struct Dci {
  std::uint16_t rnti = 0;
  DciFormat format = DciFormat::n1_dl_assignment;
  std::uint8_t duration = 1;         // NPDCCH subframes incl. repetitions
  std::uint16_t data_delay = 0;      // DCI start -> NPDSCH/NPUSCH start, subframes
  std::uint16_t data_duration = 1;   // NPDSCH/NPUSCH subframes incl. repetitions
  std::uint8_t data_repetitions = 1;
  std::uint16_t tbs_bytes = 0;       // N0: granted transport block size
  bool new_data = true;              // N0: false requests a HARQ retransmission
  std::uint16_t ack_delay = 0;       // N1: NPDSCH end -> HARQ-ACK start, subframes

  bool operator==(const Dci&) const = default;
};

enum class PduKind : std::uint8_t { rar = 0, msg4 = 1, data = 2 };

/// One NPDSCH transmission starting at the request's subframe.
struct DlPdu {
  std::uint16_t rnti = 0;
  PduKind kind = PduKind::data;
  std::uint8_t repetitions = 1;
  std::uint16_t duration = 1;
  Bytes payload;

  bool operator==(const DlPdu&) const = default;
};

enum class UlKind : std::uint8_t { npusch = 0, harq_ack = 1 };

/// An uplink reception expected to start at the request's subframe.
struct UlGrant {
  std::uint16_t rnti = 0;
  UlKind kind = UlKind::npusch;
  std::uint8_t repetitions = 1;
  std::uint16_t duration = 1;

  bool operator==(const UlGrant&) const = default;
};

struct SubframeIndication {
  std::uint16_t sfn = 0;
  std::uint8_t sf = 0;
  bool operator==(const SubframeIndication&) const = default;
};

struct DlConfigRequest {
  std::uint16_t sfn = 0;
  std::uint8_t sf = 0;
  std::vector<Dci> dci_list;
  std::vector<DlPdu> pdu_list;
  bool operator==(const DlConfigRequest&) const = default;
};

struct UlConfigRequest {
  std::uint16_t sfn = 0;
  std::uint8_t sf = 0;
  std::vector<UlGrant> grants;
  bool operator==(const UlConfigRequest&) const = default;
};

/// `sfn`/`sf` give the subframe in which the preamble ended.
struct RachIndication {
  std::uint16_t sfn = 0;
  std::uint8_t sf = 0;
  std::uint8_t subcarrier = 0;
  std::uint8_t ce_level_hint = 0;
  bool operator==(const RachIndication&) const = default;
};

struct RxIndication {
  std::uint16_t rnti = 0;
  Bytes payload;
  bool operator==(const RxIndication&) const = default;
};

struct CrcIndication {
  std::uint16_t rnti = 0;
  bool pass = false;
  bool operator==(const CrcIndication&) const = default;
};

struct HarqIndication {
  std::uint16_t rnti = 0;
  bool ack = false;
  bool operator==(const HarqIndication&) const = default;
};

using FapiMessage = std::variant<SubframeIndication, DlConfigRequest, UlConfigRequest, RachIndication,
                                 RxIndication, CrcIndication, HarqIndication>;

MsgType type_of(const FapiMessage& msg);
std::string_view name_of(MsgType type);

/// Throws CodecError when a field is out of range or the body exceeds 65535 bytes.
Bytes encode(const FapiMessage& msg);

/// Throws CodecError on any malformed frame.
FapiMessage decode(std::span<const std::uint8_t> frame);

FrameHeader decode_header(std::span<const std::uint8_t> frame);

}  // namespace nbsim::fapi
