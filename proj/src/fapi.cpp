#include "nbsim/fapi.hpp"

#include <limits>

namespace nbsim::fapi {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_time(std::uint16_t sfn, std::uint8_t sf) {
  if (sfn >= 1024 || sf >= 10) {
    throw CodecError("sfn/sf out of range: " + std::to_string(sfn) + "/" + std::to_string(sf));
  }
}

void put_dci(ByteWriter& w, const Dci& d) {
  w.u16(d.rnti);
  w.u8(static_cast<std::uint8_t>(d.format));
  w.u8(d.duration);
  w.u16(d.data_delay);
  w.u16(d.data_duration);
  w.u8(d.data_repetitions);
  w.u16(d.tbs_bytes);
  w.u8(d.new_data ? 1 : 0);
  w.u16(d.ack_delay);
}

Dci get_dci(ByteReader& r) {
  Dci d;
  d.rnti = r.u16();
  auto format = r.u8();
  if (format > 1) throw CodecError("invalid DCI format " + std::to_string(format));
  d.format = static_cast<DciFormat>(format);
  d.duration = r.u8();
  d.data_delay = r.u16();
  d.data_duration = r.u16();
  d.data_repetitions = r.u8();
  d.tbs_bytes = r.u16();
  auto nd = r.u8();
  if (nd > 1) throw CodecError("invalid DCI new-data flag");
  d.new_data = nd == 1;
  d.ack_delay = r.u16();
  return d;
}

struct Encoded {
  MsgType type;
  std::uint16_t sfn = 0;
  std::uint8_t sf = 0;
  Bytes body;
};

Encoded encode_body(const FapiMessage& msg) {
  ByteWriter w;
  Encoded out{type_of(msg), 0, 0, {}};
  std::visit(Overloaded{
                 [&](const SubframeIndication& m) {
                   check_time(m.sfn, m.sf);
                   out.sfn = m.sfn;
                   out.sf = m.sf;
                 },
                 [&](const DlConfigRequest& m) {
                   check_time(m.sfn, m.sf);
                   out.sfn = m.sfn;
                   out.sf = m.sf;
                   if (m.dci_list.size() > 255 || m.pdu_list.size() > 255) throw CodecError("too many DCIs/PDUs");
                   w.u8(static_cast<std::uint8_t>(m.dci_list.size()));
                   for (const auto& d : m.dci_list) put_dci(w, d);
                   w.u8(static_cast<std::uint8_t>(m.pdu_list.size()));
                   for (const auto& p : m.pdu_list) {
                     w.u16(p.rnti);
                     w.u8(static_cast<std::uint8_t>(p.kind));
                     w.u8(p.repetitions);
                     w.u16(p.duration);
                     w.blob16(p.payload);
                   }
                 },
                 [&](const UlConfigRequest& m) {
                   check_time(m.sfn, m.sf);
                   out.sfn = m.sfn;
                   out.sf = m.sf;
                   if (m.grants.size() > 255) throw CodecError("too many UL grants");
                   w.u8(static_cast<std::uint8_t>(m.grants.size()));
                   for (const auto& g : m.grants) {
                     w.u16(g.rnti);
                     w.u8(static_cast<std::uint8_t>(g.kind));
                     w.u8(g.repetitions);
                     w.u16(g.duration);
                   }
                 },
                 [&](const RachIndication& m) {
                   check_time(m.sfn, m.sf);
                   if (m.subcarrier >= 48 || m.ce_level_hint > 2) throw CodecError("RACH indication out of range");
                   out.sfn = m.sfn;
                   out.sf = m.sf;
                   w.u8(m.subcarrier);
                   w.u8(m.ce_level_hint);
                 },
                 [&](const RxIndication& m) {
                   w.u16(m.rnti);
                   w.raw(m.payload);
                 },
                 [&](const CrcIndication& m) {
                   w.u16(m.rnti);
                   w.u8(m.pass ? 1 : 0);
                 },
                 [&](const HarqIndication& m) {
                   w.u16(m.rnti);
                   w.u8(m.ack ? 1 : 0);
                 },
             },
             msg);
  out.body = w.take();
  if (out.body.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw CodecError("FAPI body of " + std::to_string(out.body.size()) + " bytes exceeds 65535");
  }
  return out;
}

bool read_flag(ByteReader& r, const char* what) {
  auto v = r.u8();
  if (v > 1) throw CodecError(std::string("invalid ") + what + " flag");
  return v == 1;
}

}  // namespace

MsgType type_of(const FapiMessage& msg) {
  return std::visit(Overloaded{
                        [](const SubframeIndication&) { return MsgType::subframe_indication; },
                        [](const DlConfigRequest&) { return MsgType::dl_config_request; },
                        [](const UlConfigRequest&) { return MsgType::ul_config_request; },
                        [](const RachIndication&) { return MsgType::rach_indication; },
                        [](const RxIndication&) { return MsgType::rx_indication; },
                        [](const CrcIndication&) { return MsgType::crc_indication; },
                        [](const HarqIndication&) { return MsgType::harq_indication; },
                    },
                    msg);
}

std::string_view name_of(MsgType type) {
  switch (type) {
    case MsgType::subframe_indication: return "SUBFRAME.indication";
    case MsgType::dl_config_request: return "DL_CONFIG.request";
    case MsgType::ul_config_request: return "UL_CONFIG.request";
    case MsgType::rach_indication: return "RACH.indication";
    case MsgType::rx_indication: return "RX_ULSCH.indication";
    case MsgType::crc_indication: return "CRC.indication";
    case MsgType::harq_indication: return "HARQ.indication";
  }
  return "UNKNOWN";
}

Bytes encode(const FapiMessage& msg) {
  Encoded e = encode_body(msg);
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(e.type));
  w.u16(static_cast<std::uint16_t>(e.body.size()));
  w.u16(e.sfn);
  w.u8(e.sf);
  w.u8(0);
  w.raw(e.body);
  return w.take();
}

FrameHeader decode_header(std::span<const std::uint8_t> frame) {
  if (frame.size() < kHeaderSize) {
    throw CodecError("truncated frame: " + std::to_string(frame.size()) + " byte(s), header needs 8");
  }
  ByteReader r(frame.first(kHeaderSize));
  FrameHeader h;
  h.msg_type = r.u16();
  h.body_len = r.u16();
  h.sfn = r.u16();
  h.sf = r.u8();
  h.flags = r.u8();
  return h;
}

FapiMessage decode(std::span<const std::uint8_t> frame) {
  const FrameHeader h = decode_header(frame);
  const std::size_t total = kHeaderSize + h.body_len;
  if (frame.size() < total) {
    throw CodecError("truncated frame: body_len " + std::to_string(h.body_len) + ", have " +
                     std::to_string(frame.size() - kHeaderSize));
  }
  if (frame.size() > total) {
    throw CodecError("length mismatch: body_len " + std::to_string(h.body_len) + ", frame carries " +
                     std::to_string(frame.size() - kHeaderSize));
  }
  ByteReader r(frame.subspan(kHeaderSize));
  const auto type = static_cast<MsgType>(h.msg_type);
  const bool timed = type == MsgType::subframe_indication || type == MsgType::dl_config_request ||
                     type == MsgType::ul_config_request || type == MsgType::rach_indication;
  if (timed) check_time(h.sfn, h.sf);

  FapiMessage out;
  switch (type) {
    case MsgType::subframe_indication:
      out = SubframeIndication{h.sfn, h.sf};
      break;
    case MsgType::dl_config_request: {
      DlConfigRequest m{h.sfn, h.sf, {}, {}};
      auto ndci = r.u8();
      for (int i = 0; i < ndci; ++i) m.dci_list.push_back(get_dci(r));
      auto npdu = r.u8();
      for (int i = 0; i < npdu; ++i) {
        DlPdu p;
        p.rnti = r.u16();
        auto kind = r.u8();
        if (kind > 2) throw CodecError("invalid PDU kind " + std::to_string(kind));
        p.kind = static_cast<PduKind>(kind);
        p.repetitions = r.u8();
        p.duration = r.u16();
        p.payload = r.blob16();
        m.pdu_list.push_back(std::move(p));
      }
      out = std::move(m);
      break;
    }
    case MsgType::ul_config_request: {
      UlConfigRequest m{h.sfn, h.sf, {}};
      auto n = r.u8();
      for (int i = 0; i < n; ++i) {
        UlGrant g;
        g.rnti = r.u16();
        auto kind = r.u8();
        if (kind > 1) throw CodecError("invalid UL grant kind " + std::to_string(kind));
        g.kind = static_cast<UlKind>(kind);
        g.repetitions = r.u8();
        g.duration = r.u16();
        m.grants.push_back(g);
      }
      out = std::move(m);
      break;
    }
    case MsgType::rach_indication: {
      RachIndication m{h.sfn, h.sf, r.u8(), 0};
      m.ce_level_hint = r.u8();
      if (m.subcarrier >= 48 || m.ce_level_hint > 2) throw CodecError("RACH indication out of range");
      out = m;
      break;
    }
    case MsgType::rx_indication: {
      RxIndication m;
      m.rnti = r.u16();
      m.payload = r.raw(r.remaining());
      out = std::move(m);
      break;
    }
    case MsgType::crc_indication: {
      auto rnti = r.u16();
      out = CrcIndication{rnti, read_flag(r, "CRC pass")};
      break;
    }
    case MsgType::harq_indication: {
      auto rnti = r.u16();
      out = HarqIndication{rnti, read_flag(r, "HARQ ack")};
      break;
    }
    default:
      throw CodecError("unknown FAPI message type 0x" + to_hex(frame.first(2)));
  }
  r.expect_end("FAPI body");
  return out;
}

}  // namespace nbsim::fapi
