#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "nbsim/bytes.hpp"

// MAC PDUs and RRC messages exchanged between UE and eNB over the simulated air
// interface. Encodings are compact project-specific TLVs, not ASN.1.
namespace nbsim::air {

inline constexpr std::size_t kContentionIdSize = 6;
using ContentionId = std::array<std::uint8_t, kContentionIdSize>;

/// One random access response entry. `msg3_delay` counts subframes from the
/// last RAR NPDSCH subframe to the first Msg3 subframe.
inline constexpr std::size_t kRarEntrySize = 13;

struct RarEntry {
  std::uint8_t rapid = 0;  // preamble subcarrier
  std::uint16_t timing_advance = 0;
  std::uint16_t temp_crnti = 0;
  std::uint16_t msg3_delay = 0;
  std::uint8_t msg3_subcarrier = 0;
  std::uint8_t msg3_repetitions = 1;
  std::uint16_t msg3_duration = 1;
  std::uint16_t msg3_tbs = 0;

  bool operator==(const RarEntry&) const = default;
};

Bytes encode_rar(const std::vector<RarEntry>& entries);
std::vector<RarEntry> decode_rar(std::span<const std::uint8_t> pdu);

struct UlMacPdu {
  std::optional<std::uint16_t> crnti;  // C-RNTI MAC CE (random access from a connected UE)
  std::uint16_t buffer_bytes = 0;      // buffer status after this PDU
  Bytes sdu;                           // empty: padding/BSR only

  bool operator==(const UlMacPdu&) const = default;
};

Bytes encode(const UlMacPdu& pdu);
UlMacPdu decode_ul_mac(std::span<const std::uint8_t> bytes);

struct DlMacPdu {
  std::optional<ContentionId> contention_id;
  Bytes sdu;

  bool operator==(const DlMacPdu&) const = default;
};

Bytes encode(const DlMacPdu& pdu);
DlMacPdu decode_dl_mac(std::span<const std::uint8_t> bytes);

// --- RRC -------------------------------------------------------------------

struct RrcConnectionRequest {
  std::uint64_t ue_identity = 0;  // 40-bit random value
  std::uint8_t cause = 0;         // 0 = mo-Signalling, 1 = mo-Data
  bool operator==(const RrcConnectionRequest&) const = default;
};

struct RrcConnectionSetup {
  std::uint8_t transaction_id = 0;
  bool operator==(const RrcConnectionSetup&) const = default;
};

struct RrcConnectionSetupComplete {
  std::uint8_t transaction_id = 0;
  std::uint8_t release_version = 13;
  bool multitone = false;
  Bytes nas;
  bool operator==(const RrcConnectionSetupComplete&) const = default;
};

struct UlInformationTransfer {
  Bytes nas;
  bool operator==(const UlInformationTransfer&) const = default;
};

struct DlInformationTransfer {
  Bytes nas;
  bool operator==(const DlInformationTransfer&) const = default;
};

using RrcMessage = std::variant<RrcConnectionRequest, RrcConnectionSetup, RrcConnectionSetupComplete,
                                UlInformationTransfer, DlInformationTransfer>;

Bytes encode(const RrcMessage& msg);
RrcMessage decode_rrc(std::span<const std::uint8_t> bytes);
std::string_view name_of(const RrcMessage& msg);

/// Contention resolution identity: the first six bytes of the Msg3 CCCH SDU.
ContentionId contention_id_of(std::span<const std::uint8_t> ccch_sdu);

}  // namespace nbsim::air
