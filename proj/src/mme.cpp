#include "nbsim/mme.hpp"

#include <algorithm>

namespace nbsim::core {

void SubscriberTable::add(const std::string& imsi, const nas::Key& k) {
  if (!nas::valid_imsi(imsi)) throw ConfigError("invalid IMSI '" + imsi + "'");
  if (!keys_.emplace(imsi, k).second) throw ConfigError("duplicate subscriber IMSI " + imsi);
}

const nas::Key* SubscriberTable::find(const std::string& imsi) const {
  auto it = keys_.find(imsi);
  return it == keys_.end() ? nullptr : &it->second;
}

std::string IpPool::allocate() {
  if (next_ > kLastHost) throw Error("IP pool exhausted");
  return nas::format_ipv4(kBase + next_++);
}

std::string format_sink_record(const UdpSinkRecord& r) {
  return std::to_string(r.abs_sf) + " " + r.dest_ip + ":" + std::to_string(r.dest_port) + " " + to_hex(r.payload);
}

Mme::Mme(MmeOptions options, SubscriberTable subscribers, Trace* trace)
    : options_(std::move(options)), subscribers_(std::move(subscribers)), trace_(trace), rng_(options_.rand_seed) {}

std::size_t Mme::attached_count() const {
  return static_cast<std::size_t>(
      std::count_if(ues_.begin(), ues_.end(), [](const auto& kv) { return kv.second.state == State::attached; }));
}

void Mme::emit_sent(const s1ap::S1apMessage& msg, AbsSf now, std::uint32_t entity) {
  if (trace_ == nullptr) return;
  trace_->emit(now, TraceTag::s1ap, Component::mme, entity, s1ap::describe(msg));
}

std::vector<s1ap::S1apMessage> Mme::handle_s1(const s1ap::S1apMessage& msg, AbsSf now) {
  std::vector<s1ap::S1apMessage> out;
  auto warn = [&](std::uint32_t entity, std::string text) {
    if (trace_ != nullptr) trace_->emit(now, TraceTag::warn, Component::mme, entity, std::move(text));
  };

  if (std::holds_alternative<s1ap::S1SetupRequest>(msg)) {
    s1_established_ = true;
    out.emplace_back(s1ap::S1SetupResponse{options_.name});
    emit_sent(out.back(), now, 0);
    return out;
  }
  if (std::holds_alternative<s1ap::S1SetupResponse>(msg)) {
    warn(0, "protocol error: unexpected S1SetupResponse from eNB");
    return out;
  }
  if (!s1_established_) {
    warn(0, "protocol error: " + std::string(s1ap::name_of(msg)) + " before S1 setup, dropped");
    return out;
  }

  if (const auto* init = std::get_if<s1ap::InitialUeMessage>(&msg)) {
    const auto id = next_mme_ue_id_++;
    auto& ue = ues_[id];
    ue.ids = s1ap::UeIds{id, init->enb_ue_id};
    on_nas(ue, init->nas, now, out);
  } else if (const auto* ul = std::get_if<s1ap::UplinkNasTransport>(&msg)) {
    auto it = ues_.find(ul->ids.mme_ue_id);
    if (it == ues_.end() || it->second.ids.enb_ue_id != ul->ids.enb_ue_id) {
      warn(ul->ids.mme_ue_id, "UplinkNASTransport for unknown UE association, dropped");
      return out;
    }
    on_nas(it->second, ul->nas, now, out);
  } else {
    warn(0, "protocol error: unexpected " + std::string(s1ap::name_of(msg)) + " from eNB");
  }
  return out;
}

void Mme::send_nas(UeContext& ue, const nas::NasPdu& pdu, AbsSf now, std::vector<s1ap::S1apMessage>& out) {
  if (trace_ != nullptr) {
    trace_->emit(now, TraceTag::nas_dbg_nas_msg, Component::mme, ue.ids.mme_ue_id,
                 "send " + std::string(nas::name_of(pdu)));
  }
  out.emplace_back(s1ap::DownlinkNasTransport{ue.ids, nas::encode(pdu)});
  emit_sent(out.back(), now, ue.ids.mme_ue_id);
}

void Mme::reject(UeContext& ue, AbsSf now, std::vector<s1ap::S1apMessage>& out, const std::string& why) {
  if (trace_ != nullptr) trace_->emit(now, TraceTag::nas_dbg_nas_msg, Component::mme, ue.ids.mme_ue_id, why);
  const auto id = ue.ids.mme_ue_id;
  send_nas(ue, nas::AuthenticationReject{}, now, out);
  ues_.erase(id);
}

void Mme::start_auth(UeContext& ue, AbsSf now, std::vector<s1ap::S1apMessage>& out) {
  const nas::Key* k = subscribers_.find(ue.imsi);
  if (k == nullptr) {
    reject(ue, now, out, "unknown subscriber imsi=" + ue.imsi);
    return;
  }
  nas::Rand rand{};
  for (std::size_t i = 0; i < rand.size(); i += 8) {
    const auto v = rng_();
    for (std::size_t b = 0; b < 8; ++b) rand[i + b] = static_cast<std::uint8_t>(v >> (56 - 8 * b));
  }
  ue.xres = nas::auth_res(*k, rand);
  ue.state = State::wait_auth;
  send_nas(ue, nas::AuthenticationRequest{rand}, now, out);
}

void Mme::on_nas(UeContext& ue, const Bytes& nas_bytes, AbsSf now, std::vector<s1ap::S1apMessage>& out) {
  nas::NasPdu pdu;
  try {
    pdu = nas::decode(nas_bytes);
  } catch (const CodecError& e) {
    if (trace_ != nullptr) {
      trace_->emit(now, TraceTag::warn, Component::mme, ue.ids.mme_ue_id, std::string("undecodable NAS: ") + e.what());
    }
    return;
  }
  if (trace_ != nullptr) {
    trace_->emit(now, TraceTag::nas_dbg_nas_msg, Component::mme, ue.ids.mme_ue_id,
                 "recv " + std::string(nas::name_of(pdu)));
  }
  auto unexpected = [&] {
    if (trace_ != nullptr) {
      trace_->emit(now, TraceTag::warn, Component::mme, ue.ids.mme_ue_id,
                   "unexpected " + std::string(nas::name_of(pdu)) + ", ignored");
    }
  };

  if (const auto* req = std::get_if<nas::AttachRequest>(&pdu)) {
    ue.imsi = req->imsi;
    ue.ip.clear();
    if (options_.identity_request) {
      ue.state = State::wait_identity;
      send_nas(ue, nas::IdentityRequest{}, now, out);
    } else {
      start_auth(ue, now, out);
    }
  } else if (const auto* id = std::get_if<nas::IdentityResponse>(&pdu)) {
    if (ue.state != State::wait_identity) return unexpected();
    ue.imsi = id->imsi;
    start_auth(ue, now, out);
  } else if (const auto* resp = std::get_if<nas::AuthenticationResponse>(&pdu)) {
    if (ue.state != State::wait_auth) return unexpected();
    if (resp->res != ue.xres) {
      reject(ue, now, out, "authentication failure imsi=" + ue.imsi);
      return;
    }
    ue.state = State::wait_smc;
    send_nas(ue, nas::SecurityModeCommand{}, now, out);
  } else if (std::holds_alternative<nas::SecurityModeComplete>(pdu)) {
    if (ue.state != State::wait_smc) return unexpected();
    try {
      ue.ip = pool_.allocate();
    } catch (const Error& e) {
      if (trace_ != nullptr) trace_->emit(now, TraceTag::warn, Component::mme, ue.ids.mme_ue_id, e.what());
      return;
    }
    ue.state = State::wait_complete;
    send_nas(ue, nas::AttachAccept{ue.ip}, now, out);
  } else if (std::holds_alternative<nas::AttachComplete>(pdu)) {
    if (ue.state != State::wait_complete) return unexpected();
    ue.state = State::attached;
    if (trace_ != nullptr) {
      trace_->emit(now, TraceTag::nas_dbg_nas_msg, Component::mme, ue.ids.mme_ue_id,
                   "attached imsi=" + ue.imsi + " ip=" + ue.ip);
    }
  } else if (const auto* data = std::get_if<nas::EsmDataTransport>(&pdu)) {
    if (ue.state != State::attached) return unexpected();
    sink_.push_back(UdpSinkRecord{data->dest_ip, data->dest_port, data->payload, now});
    if (trace_ != nullptr) {
      trace_->emit(now, TraceTag::nas_dbg_nas_msg, Component::mme, ue.ids.mme_ue_id,
                   "deliver " + std::to_string(data->payload.size()) + " bytes to " + data->dest_ip + ":" +
                       std::to_string(data->dest_port));
    }
  } else {
    unexpected();
  }
}

}  // namespace nbsim::core
