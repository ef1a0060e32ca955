#include "nbsim/s1ap.hpp"

#include <limits>

#include "nbsim/nas.hpp"

namespace nbsim::s1ap {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Procedure codes borrowed from S1AP (S1Setup 17, InitialUEMessage 12,
// DownlinkNASTransport 11, UplinkNASTransport 13); the response gets the high bit.
enum S1Type : std::uint8_t {
  kSetupRequest = 17,
  kSetupResponse = 17 | 0x80,
  kInitialUe = 12,
  kDownlinkNas = 11,
  kUplinkNas = 13,
};

void put_nas(ByteWriter& w, const Bytes& nas) {
  if (nas.empty()) throw CodecError("S1AP NAS container is empty");
  w.blob16(nas);
}

Bytes get_nas(ByteReader& r) {
  auto nas = r.blob16();
  if (nas.empty()) throw CodecError("S1AP NAS container is empty");
  return nas;
}

void put_ids(ByteWriter& w, const UeIds& ids) {
  w.u32(ids.mme_ue_id);
  w.u32(ids.enb_ue_id);
}

UeIds get_ids(ByteReader& r) {
  UeIds ids;
  ids.mme_ue_id = r.u32();
  ids.enb_ue_id = r.u32();
  return ids;
}

}  // namespace

Bytes encode(const S1apMessage& msg) {
  ByteWriter body;
  std::uint8_t type = 0;
  std::visit(Overloaded{
                 [&](const S1SetupRequest& m) {
                   type = kSetupRequest;
                   body.u32(m.enb_id);
                   body.str8(m.plmn);
                 },
                 [&](const S1SetupResponse& m) {
                   type = kSetupResponse;
                   body.str8(m.mme_name);
                 },
                 [&](const InitialUeMessage& m) {
                   type = kInitialUe;
                   body.u32(m.enb_ue_id);
                   put_nas(body, m.nas);
                 },
                 [&](const DownlinkNasTransport& m) {
                   type = kDownlinkNas;
                   put_ids(body, m.ids);
                   put_nas(body, m.nas);
                 },
                 [&](const UplinkNasTransport& m) {
                   type = kUplinkNas;
                   put_ids(body, m.ids);
                   put_nas(body, m.nas);
                 },
             },
             msg);
  if (body.size() > std::numeric_limits<std::uint16_t>::max()) throw CodecError("S1AP body exceeds 65535 bytes");
  ByteWriter w;
  w.u8(type);
  w.u16(static_cast<std::uint16_t>(body.size()));
  w.raw(body.buffer());
  return w.take();
}

S1apMessage decode(std::span<const std::uint8_t> frame) {
  ByteReader head(frame);
  const auto type = head.u8();
  const auto len = head.u16();
  if (head.remaining() < len) throw CodecError("truncated S1AP frame");
  if (head.remaining() > len) throw CodecError("S1AP length mismatch");
  ByteReader r(frame.subspan(3));
  S1apMessage out;
  switch (type) {
    case kSetupRequest: {
      S1SetupRequest m;
      m.enb_id = r.u32();
      m.plmn = r.str8();
      out = std::move(m);
      break;
    }
    case kSetupResponse: out = S1SetupResponse{r.str8()}; break;
    case kInitialUe: {
      InitialUeMessage m;
      m.enb_ue_id = r.u32();
      m.nas = get_nas(r);
      out = std::move(m);
      break;
    }
    case kDownlinkNas: {
      DownlinkNasTransport m;
      m.ids = get_ids(r);
      m.nas = get_nas(r);
      out = std::move(m);
      break;
    }
    case kUplinkNas: {
      UplinkNasTransport m;
      m.ids = get_ids(r);
      m.nas = get_nas(r);
      out = std::move(m);
      break;
    }
    default:
      throw CodecError("unknown S1AP message type " + std::to_string(type));
  }
  r.expect_end("S1AP body");
  return out;
}

std::string_view name_of(const S1apMessage& msg) {
  return std::visit(Overloaded{
                        [](const S1SetupRequest&) { return "S1SetupRequest"; },
                        [](const S1SetupResponse&) { return "S1SetupResponse"; },
                        [](const InitialUeMessage&) { return "InitialUEMessage"; },
                        [](const DownlinkNasTransport&) { return "DownlinkNASTransport"; },
                        [](const UplinkNasTransport&) { return "UplinkNASTransport"; },
                    },
                    msg);
}

std::string describe(const S1apMessage& msg) {
  std::string out(name_of(msg));
  const Bytes* nas_bytes = nullptr;
  if (const auto* init = std::get_if<InitialUeMessage>(&msg)) {
    out += " enb_ue_id=" + std::to_string(init->enb_ue_id);
    nas_bytes = &init->nas;
  } else if (const auto* dl = std::get_if<DownlinkNasTransport>(&msg)) {
    out += " mme_ue_id=" + std::to_string(dl->ids.mme_ue_id) + " enb_ue_id=" + std::to_string(dl->ids.enb_ue_id);
    nas_bytes = &dl->nas;
  } else if (const auto* ul = std::get_if<UplinkNasTransport>(&msg)) {
    out += " mme_ue_id=" + std::to_string(ul->ids.mme_ue_id) + " enb_ue_id=" + std::to_string(ul->ids.enb_ue_id);
    nas_bytes = &ul->nas;
  }
  if (nas_bytes != nullptr) {
    try {
      out += " nas=" + std::string(nas::name_of(nas::decode(*nas_bytes)));
    } catch (const CodecError&) {
      out += " nas=?";
    }
  }
  return out;
}

}  // namespace nbsim::s1ap
