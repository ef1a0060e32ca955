#include "nbsim/air.hpp"

#include <algorithm>

namespace nbsim::air {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

enum RrcType : std::uint8_t {
  kConnectionRequest = 0x10,
  kConnectionSetup = 0x11,
  kConnectionSetupComplete = 0x12,
  kUlInformationTransfer = 0x13,
  kDlInformationTransfer = 0x14,
};

}  // namespace

Bytes encode_rar(const std::vector<RarEntry>& entries) {
  if (entries.empty() || entries.size() > 255) throw CodecError("RAR must carry 1..255 entries");
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(entries.size()));
  for (const auto& e : entries) {
    w.u8(e.rapid);
    w.u16(e.timing_advance);
    w.u16(e.temp_crnti);
    w.u16(e.msg3_delay);
    w.u8(e.msg3_subcarrier);
    w.u8(e.msg3_repetitions);
    w.u16(e.msg3_duration);
    w.u16(e.msg3_tbs);
  }
  return w.take();
}

std::vector<RarEntry> decode_rar(std::span<const std::uint8_t> pdu) {
  ByteReader r(pdu);
  auto n = r.u8();
  if (n == 0) throw CodecError("empty RAR");
  std::vector<RarEntry> out;
  for (int i = 0; i < n; ++i) {
    RarEntry e;
    e.rapid = r.u8();
    e.timing_advance = r.u16();
    e.temp_crnti = r.u16();
    e.msg3_delay = r.u16();
    e.msg3_subcarrier = r.u8();
    e.msg3_repetitions = r.u8();
    e.msg3_duration = r.u16();
    e.msg3_tbs = r.u16();
    out.push_back(e);
  }
  r.expect_end("RAR");
  return out;
}

Bytes encode(const UlMacPdu& pdu) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>((pdu.crnti ? 0x01 : 0) | (pdu.sdu.empty() ? 0 : 0x02)));
  w.u16(pdu.buffer_bytes);
  if (pdu.crnti) w.u16(*pdu.crnti);
  w.raw(pdu.sdu);
  return w.take();
}

UlMacPdu decode_ul_mac(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  UlMacPdu pdu;
  auto flags = r.u8();
  if ((flags & ~0x03) != 0) throw CodecError("invalid UL MAC flags");
  pdu.buffer_bytes = r.u16();
  if ((flags & 0x01) != 0) pdu.crnti = r.u16();
  pdu.sdu = r.raw(r.remaining());
  if (((flags & 0x02) != 0) != !pdu.sdu.empty()) throw CodecError("UL MAC SDU flag mismatch");
  return pdu;
}

Bytes encode(const DlMacPdu& pdu) {
  ByteWriter w;
  w.u8(pdu.contention_id ? 1 : 0);
  if (pdu.contention_id) w.raw(*pdu.contention_id);
  w.raw(pdu.sdu);
  return w.take();
}

DlMacPdu decode_dl_mac(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  DlMacPdu pdu;
  auto flags = r.u8();
  if (flags > 1) throw CodecError("invalid DL MAC flags");
  if (flags == 1) {
    auto id = r.raw(kContentionIdSize);
    ContentionId cid{};
    std::copy(id.begin(), id.end(), cid.begin());
    pdu.contention_id = cid;
  }
  pdu.sdu = r.raw(r.remaining());
  return pdu;
}

Bytes encode(const RrcMessage& msg) {
  ByteWriter w;
  std::visit(Overloaded{
                 [&](const RrcConnectionRequest& m) {
                   w.u8(kConnectionRequest);
                   for (int shift = 32; shift >= 0; shift -= 8) w.u8(static_cast<std::uint8_t>(m.ue_identity >> shift));
                   w.u8(m.cause);
                 },
                 [&](const RrcConnectionSetup& m) {
                   w.u8(kConnectionSetup);
                   w.u8(m.transaction_id);
                 },
                 [&](const RrcConnectionSetupComplete& m) {
                   w.u8(kConnectionSetupComplete);
                   w.u8(m.transaction_id);
                   w.u8(m.release_version);
                   w.u8(m.multitone ? 1 : 0);
                   w.blob16(m.nas);
                 },
                 [&](const UlInformationTransfer& m) {
                   w.u8(kUlInformationTransfer);
                   w.blob16(m.nas);
                 },
                 [&](const DlInformationTransfer& m) {
                   w.u8(kDlInformationTransfer);
                   w.blob16(m.nas);
                 },
             },
             msg);
  return w.take();
}

RrcMessage decode_rrc(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  RrcMessage out;
  switch (r.u8()) {
    case kConnectionRequest: {
      RrcConnectionRequest m;
      for (int i = 0; i < 5; ++i) m.ue_identity = m.ue_identity << 8 | r.u8();
      m.cause = r.u8();
      out = m;
      break;
    }
    case kConnectionSetup:
      out = RrcConnectionSetup{r.u8()};
      break;
    case kConnectionSetupComplete: {
      RrcConnectionSetupComplete m;
      m.transaction_id = r.u8();
      m.release_version = r.u8();
      m.multitone = r.u8() != 0;
      m.nas = r.blob16();
      out = std::move(m);
      break;
    }
    case kUlInformationTransfer:
      out = UlInformationTransfer{r.blob16()};
      break;
    case kDlInformationTransfer:
      out = DlInformationTransfer{r.blob16()};
      break;
    default:
      throw CodecError("unknown RRC message type");
  }
  r.expect_end("RRC message");
  return out;
}

std::string_view name_of(const RrcMessage& msg) {
  return std::visit(Overloaded{
                        [](const RrcConnectionRequest&) { return "RRCConnectionRequest-NB"; },
                        [](const RrcConnectionSetup&) { return "RRCConnectionSetup-NB"; },
                        [](const RrcConnectionSetupComplete&) { return "RRCConnectionSetupComplete-NB"; },
                        [](const UlInformationTransfer&) { return "ULInformationTransfer-NB"; },
                        [](const DlInformationTransfer&) { return "DLInformationTransfer-NB"; },
                    },
                    msg);
}

ContentionId contention_id_of(std::span<const std::uint8_t> ccch_sdu) {
  ContentionId id{};
  std::copy_n(ccch_sdu.begin(), std::min(ccch_sdu.size(), kContentionIdSize), id.begin());
  return id;
}

}  // namespace nbsim::air
