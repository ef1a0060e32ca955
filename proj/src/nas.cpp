#include "nbsim/nas.hpp"

#include <algorithm>
#include <charconv>

namespace nbsim::nas {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// EMM message type values from the EPS NAS numbering; ESM data transport uses
// its ESM value.
enum NasType : std::uint8_t {
  kAttachRequest = 0x41,
  kAttachAccept = 0x42,
  kAttachComplete = 0x43,
  kAuthenticationRequest = 0x52,
  kAuthenticationResponse = 0x53,
  kAuthenticationReject = 0x54,
  kIdentityRequest = 0x55,
  kIdentityResponse = 0x56,
  kSecurityModeCommand = 0x5d,
  kSecurityModeComplete = 0x5e,
  kEsmDataTransport = 0xeb,
};

void put_imsi(ByteWriter& w, const std::string& imsi) {
  if (!valid_imsi(imsi)) throw CodecError("invalid IMSI '" + imsi + "'");
  w.str8(imsi);
}

std::string get_imsi(ByteReader& r) {
  auto imsi = r.str8();
  if (!valid_imsi(imsi)) throw CodecError("invalid IMSI in NAS message");
  return imsi;
}

void put_ip(ByteWriter& w, const std::string& ip) {
  auto addr = parse_ipv4(ip);
  if (!addr) throw CodecError("invalid IPv4 address '" + ip + "'");
  w.u32(*addr);
}

template <std::size_t N>
std::array<std::uint8_t, N> get_array(ByteReader& r) {
  auto raw = r.raw(N);
  std::array<std::uint8_t, N> out{};
  std::copy(raw.begin(), raw.end(), out.begin());
  return out;
}

}  // namespace

bool valid_imsi(std::string_view imsi) {
  return imsi.size() >= 6 && imsi.size() <= 15 &&
         std::all_of(imsi.begin(), imsi.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::optional<std::uint32_t> parse_ipv4(std::string_view text) {
  std::uint32_t addr = 0;
  for (int i = 0; i < 4; ++i) {
    if (i > 0) {
      if (text.empty() || text.front() != '.') return std::nullopt;
      text.remove_prefix(1);
    }
    unsigned octet = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), octet);
    const auto used = static_cast<std::size_t>(end - text.data());
    if (ec != std::errc{} || octet > 255 || used == 0 || used > 3) return std::nullopt;
    text.remove_prefix(used);
    addr = addr << 8 | octet;
  }
  if (!text.empty()) return std::nullopt;
  return addr;
}

std::string format_ipv4(std::uint32_t addr) {
  return std::to_string(addr >> 24) + "." + std::to_string(addr >> 16 & 0xff) + "." +
         std::to_string(addr >> 8 & 0xff) + "." + std::to_string(addr & 0xff);
}

Res auth_res(const Key& k, const Rand& rand) {
  Res res{};
  for (std::size_t i = 0; i < res.size(); ++i) res[i] = static_cast<std::uint8_t>(k[i] ^ rand[i]);
  return res;
}

Bytes encode(const NasPdu& pdu) {
  ByteWriter w;
  std::visit(Overloaded{
                 [&](const AttachRequest& m) {
                   w.u8(kAttachRequest);
                   put_imsi(w, m.imsi);
                   w.u8(static_cast<std::uint8_t>(m.pco));
                 },
                 [&](const IdentityRequest&) { w.u8(kIdentityRequest); },
                 [&](const IdentityResponse& m) {
                   w.u8(kIdentityResponse);
                   put_imsi(w, m.imsi);
                 },
                 [&](const AuthenticationRequest& m) {
                   w.u8(kAuthenticationRequest);
                   w.raw(m.rand);
                 },
                 [&](const AuthenticationResponse& m) {
                   w.u8(kAuthenticationResponse);
                   w.raw(m.res);
                 },
                 [&](const AuthenticationReject&) { w.u8(kAuthenticationReject); },
                 [&](const SecurityModeCommand&) { w.u8(kSecurityModeCommand); },
                 [&](const SecurityModeComplete&) { w.u8(kSecurityModeComplete); },
                 [&](const AttachAccept& m) {
                   w.u8(kAttachAccept);
                   put_ip(w, m.ip);
                 },
                 [&](const AttachComplete&) { w.u8(kAttachComplete); },
                 [&](const EsmDataTransport& m) {
                   if (m.payload.size() > kMaxUserPayload) throw CodecError("ESM payload exceeds 1500 bytes");
                   w.u8(kEsmDataTransport);
                   put_ip(w, m.dest_ip);
                   w.u16(m.dest_port);
                   w.blob16(m.payload);
                 },
             },
             pdu);
  return w.take();
}

NasPdu decode(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  NasPdu out;
  switch (r.u8()) {
    case kAttachRequest: {
      AttachRequest m{get_imsi(r)};
      auto pco = r.u8();
      if (pco > 1) throw CodecError("invalid PCO type");
      m.pco = static_cast<PcoType>(pco);
      out = std::move(m);
      break;
    }
    case kIdentityRequest: out = IdentityRequest{}; break;
    case kIdentityResponse: out = IdentityResponse{get_imsi(r)}; break;
    case kAuthenticationRequest: out = AuthenticationRequest{get_array<16>(r)}; break;
    case kAuthenticationResponse: out = AuthenticationResponse{get_array<8>(r)}; break;
    case kAuthenticationReject: out = AuthenticationReject{}; break;
    case kSecurityModeCommand: out = SecurityModeCommand{}; break;
    case kSecurityModeComplete: out = SecurityModeComplete{}; break;
    case kAttachAccept: out = AttachAccept{format_ipv4(r.u32())}; break;
    case kAttachComplete: out = AttachComplete{}; break;
    case kEsmDataTransport: {
      EsmDataTransport m;
      m.dest_ip = format_ipv4(r.u32());
      m.dest_port = r.u16();
      m.payload = r.blob16();
      if (m.payload.size() > kMaxUserPayload) throw CodecError("ESM payload exceeds 1500 bytes");
      out = std::move(m);
      break;
    }
    default:
      throw CodecError("unknown NAS message type");
  }
  r.expect_end("NAS message");
  return out;
}

std::string_view name_of(const NasPdu& pdu) {
  return std::visit(Overloaded{
                        [](const AttachRequest&) { return "AttachRequest"; },
                        [](const IdentityRequest&) { return "IdentityRequest"; },
                        [](const IdentityResponse&) { return "IdentityResponse"; },
                        [](const AuthenticationRequest&) { return "AuthenticationRequest"; },
                        [](const AuthenticationResponse&) { return "AuthenticationResponse"; },
                        [](const AuthenticationReject&) { return "AuthenticationReject"; },
                        [](const SecurityModeCommand&) { return "SecurityModeCommand"; },
                        [](const SecurityModeComplete&) { return "SecurityModeComplete"; },
                        [](const AttachAccept&) { return "AttachAccept"; },
                        [](const AttachComplete&) { return "AttachComplete"; },
                        [](const EsmDataTransport&) { return "EsmDataTransport"; },
                    },
                    pdu);
}

}  // namespace nbsim::nas
