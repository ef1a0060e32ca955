#include "nbsim/ue.hpp"

#include <algorithm>
#include <cstdio>

#include "nbsim/enb.hpp"

namespace nbsim::ue {

namespace {

std::string hex16(std::uint16_t v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "0x%04x", v);
  return buf;
}

constexpr std::size_t kUlMacOverhead = 3;  // flags + buffer status

}  // namespace

Ue::Ue(UeParams params, const config::EnbConfig& cell, phy::Radio& radio, Trace* trace)
    : params_(std::move(params)), cell_(&cell), radio_(&radio), trace_(trace), rng_(params_.seed) {
  state_.imsi = params_.imsi;
  state_.k = params_.k;
  boot_done_at_ = params_.boot_delay;
}

void Ue::trace(AbsSf now, TraceTag tag, std::string detail) const {
  if (trace_ != nullptr) trace_->emit(now, tag, Component::ue, params_.id, std::move(detail));
}

void Ue::queue_at(AbsSf not_before, std::string line) { at_queue_.emplace_back(not_before, std::move(line)); }

int Ue::current_ce() const { return rach_ ? rach_->ce : connected_ce_; }

bool Ue::monitors(std::uint16_t rnti) const {
  if (rach_) {
    if (rach_->step == RachStep::wait_rar && rnti == rach_->ra_rnti) return true;
    if (rach_->step == RachStep::wait_msg4 && rach_->purpose == RachPurpose::attach && rnti == rach_->temp_crnti) {
      return true;
    }
  }
  return crnti_ && rnti == *crnti_;
}

std::size_t Ue::buffered_bytes() const {
  std::size_t n = 0;
  for (const auto& s : ul_buffer_) n += s.rrc.size();
  return n;
}

// --- top level ---------------------------------------------------------------

void Ue::step(AbsSf now) {
  for (const auto& tx : radio_->completed_dl()) handle_dl(tx, now);
  process_at(now);
  drive_phase(now);
  if (rach_) check_rach_timeouts(now);

  std::vector<phy::UlTransmission> due;
  std::erase_if(pending_tx_, [&](const phy::UlTransmission& t) {
    if (t.start > now) return false;
    if (t.start == now) due.push_back(t);
    return true;
  });
  for (auto& t : due) {
    last_ul_activity_ = std::max(last_ul_activity_, t.start + static_cast<AbsSf>(std::max(t.duration, 1)));
    radio_->transmit_ul(std::move(t));
  }
}

void Ue::process_at(AbsSf now) {
  if (state_.phase == Phase::powered_on || at_queue_.empty() || at_queue_.front().first > now) return;
  auto [_, line] = std::move(at_queue_.front());
  at_queue_.pop_front();
  const bool was_attached = state_.phase == Phase::attached;
  auto responses = execute_at(line, state_);
  transcript_.push_back(AtExchange{now, line, responses});
  if (state_.reboot_pending) {
    state_.reboot_pending = false;
    reset_volatile(now);
    boot_done_at_ = now + params_.boot_delay;
    trace(now, TraceTag::rrc_debug_asn, "reboot requested");
  }
  if (state_.detach_pending) {
    state_.detach_pending = false;
    if (state_.phase >= Phase::rach) go_idle(now, was_attached ? "detach requested" : "attach cancelled");
  }
  if (state_.attach_requested) auto_attach_suppressed_ = false;
}

void Ue::reset_volatile(AbsSf now) {
  (void)now;
  rach_.reset();
  crnti_.reset();
  pdsch_expect_.clear();
  pending_tx_.clear();
  ul_buffer_.clear();
  last_tb_.reset();
  attach_started_.reset();
  sync_since_.reset();
  auto_attach_suppressed_ = false;
  state_.phase = Phase::powered_on;
}

void Ue::go_idle(AbsSf now, const std::string& why) {
  rach_.reset();
  crnti_.reset();
  pdsch_expect_.clear();
  pending_tx_.clear();
  ul_buffer_.clear();
  last_tb_.reset();
  attach_started_.reset();
  state_.assigned_ip.reset();
  state_.outbox.clear();
  if (state_.phase > Phase::camped) state_.phase = Phase::camped;
  trace(now, TraceTag::nas_dbg_nas_msg, "back to idle: " + why);
}

void Ue::drive_phase(AbsSf now) {
  switch (state_.phase) {
    case Phase::powered_on:
      if (now >= boot_done_at_) {
        state_.phase = Phase::searching;
        sync_since_.reset();
        trace(now, TraceTag::rrc_debug_asn, "boot complete, cell search");
      }
      break;
    case Phase::searching: {
      bool match = false;
      if (state_.earfcn_lock) {
        try {
          auto carrier = config::earfcn_to_carrier(params_.band, state_.earfcn_lock->earfcn);
          match = carrier.dl_hz == cell_->cell.downlink_frequency_hz;
        } catch (const ConfigError&) {
          match = false;
        }
      }
      if (!match) {
        sync_since_.reset();
        break;
      }
      if (!sync_since_) sync_since_ = now;
      if (now >= *sync_since_ + params_.sync_delay) {
        state_.phase = Phase::camped;
        trace(now, TraceTag::rrc_debug_asn, "MIB-NB received");
        trace(now, TraceTag::rrc_debug_asn, "SIB1-NB received");
        trace(now, TraceTag::rrc_debug_asn, "SIB2-NB received");
        trace(now, TraceTag::rrc_debug_asn,
              "camped earfcn=" + std::to_string(state_.earfcn_lock->earfcn) +
                  " dl=" + std::to_string(cell_->cell.downlink_frequency_hz));
      }
      break;
    }
    case Phase::camped:
      if ((state_.attach_requested || state_.nv.autoconnect) && !auto_attach_suppressed_) {
        attach_started_ = now;
        state_.phase = Phase::rach;
        trace(now, TraceTag::nas_dbg_nas_msg, "attach procedure started");
        start_rach(RachPurpose::attach, now);
      }
      break;
    case Phase::rach:
    case Phase::rrc_connected:
      if (attach_started_ && now >= *attach_started_ + params_.attach_guard) {
        ++stats_.guard_expiries;
        auto_attach_suppressed_ = true;
        state_.attach_requested = false;
        go_idle(now, "attach guard timer expired");
      }
      break;
    case Phase::attached:
      while (!state_.outbox.empty()) {
        auto d = std::move(state_.outbox.front());
        state_.outbox.pop_front();
        const auto n = d.payload.size();
        send_nas(nas::EsmDataTransport{d.dest_ip, d.dest_port, std::move(d.payload)}, now, n);
      }
      break;
  }

  // Uplink data with no grant in sight: random access to ask for one.
  const bool connected = state_.phase == Phase::rrc_connected || state_.phase == Phase::attached;
  if (connected && crnti_ && !rach_ && !ul_buffer_.empty() && pending_tx_.empty() &&
      now >= last_ul_activity_ + params_.sr_delay) {
    start_rach(RachPurpose::scheduling_request, now);
  }
}

// --- random access -------------------------------------------------------------

void Ue::start_rach(RachPurpose purpose, AbsSf now) {
  RachProc r;
  r.purpose = purpose;
  r.ce = purpose == RachPurpose::attach ? std::clamp(params_.declared_ce, 0, config::kNumCeLevels - 1) : connected_ce_;
  rach_ = r;
  schedule_occasion(now);
}

void Ue::schedule_occasion(AbsSf now) {
  const auto& res = cell_->rach[static_cast<std::size_t>(rach_->ce)].nprach;
  const auto period = static_cast<AbsSf>(res.periodicity_ms);
  const auto offset = static_cast<AbsSf>(res.start_time_ms) % period;
  AbsSf n = now - now % period + offset;
  if (n < now) n += period;
  rach_->occasion = n;
  rach_->step = RachStep::wait_occasion;
}

void Ue::send_preamble(AbsSf now) {
  auto& r = *rach_;
  const auto& cfg = cell_->rach[static_cast<std::size_t>(r.ce)];
  r.subcarrier = cfg.nprach.subcarrier_offset + static_cast<int>(rng_() % static_cast<std::uint64_t>(cfg.nprach.num_subcarriers));
  const int power = std::min(23, cfg.preamble_initial_target_power_dbm + 2 * r.attempt);
  radio_->transmit_preamble(
      phy::PreambleTx{params_.id, r.subcarrier, r.ce, cfg.repetitions_per_attempt, power, now});
  ++r.attempt;
  ++stats_.preambles;
  last_ul_activity_ = now;
  const AbsSf end = now + static_cast<AbsSf>(cfg.preamble_duration_sf()) - 1;
  r.ra_rnti = enb::ra_rnti_for(now);
  r.window_last = end + static_cast<AbsSf>(cfg.response_window) * static_cast<AbsSf>(cell_->css.period());
  r.rar_pdsch_end.reset();
  r.step = RachStep::wait_rar;
  trace(now, TraceTag::rach,
        "preamble tx ce=" + std::to_string(r.ce) + " attempt=" + std::to_string(r.attempt) + " sc=" +
            std::to_string(r.subcarrier) + " power=" + std::to_string(power) + "dBm ra-rnti=" + hex16(r.ra_rnti));
}

void Ue::rach_attempt_failed(AbsSf now, const std::string& why) {
  auto& r = *rach_;
  trace(now, TraceTag::rach, "attempt failed: " + why);
  pdsch_expect_.clear();
  if (r.attempt >= cell_->rach[static_cast<std::size_t>(r.ce)].max_preamble_attempts) {
    if (r.ce + 1 >= config::kNumCeLevels) {
      ++stats_.rach_failures;
      trace(now, TraceTag::rach, "random access failure after " + std::to_string(stats_.preambles) + " preambles");
      const auto purpose = r.purpose;
      rach_.reset();
      if (purpose == RachPurpose::attach) {
        auto_attach_suppressed_ = true;
        state_.attach_requested = false;
        go_idle(now, "random access failure");
      } else {
        ul_buffer_.clear();
        trace(now, TraceTag::warn, "uplink data dropped after random access failure");
      }
      return;
    }
    ++r.ce;
    r.attempt = 0;
    trace(now, TraceTag::rach, "escalating to CE level " + std::to_string(r.ce));
  }
  schedule_occasion(now + 1);
}

void Ue::rach_succeeded(AbsSf now) {
  stats_.ce_at_success = rach_->ce;
  connected_ce_ = rach_->ce;
  trace(now, TraceTag::rach,
        "random access complete ce=" + std::to_string(rach_->ce) + " rnti=" + hex16(*crnti_));
  rach_.reset();
}

void Ue::check_rach_timeouts(AbsSf now) {
  auto& r = *rach_;
  switch (r.step) {
    case RachStep::wait_occasion:
      if (now == r.occasion) send_preamble(now);
      break;
    case RachStep::wait_rar: {
      // All NPDCCH that may start in the window have ended by window_last + r_max.
      const AbsSf dci_done = r.window_last + static_cast<AbsSf>(cell_->css.r_max) + 1;
      const bool waiting_pdsch = r.rar_pdsch_end && now <= *r.rar_pdsch_end + 1;
      if (now > dci_done && !waiting_pdsch) rach_attempt_failed(now, "no RAR in window");
      break;
    }
    case RachStep::wait_msg4:
      if (now >= r.cr_deadline) rach_attempt_failed(now, "contention resolution timer expired");
      break;
  }
}

// --- downlink ------------------------------------------------------------------

void Ue::handle_dl(const phy::DlTransmission& tx, AbsSf now) {
  if (tx.kind == phy::DlTransmission::Kind::dci) {
    if (monitors(tx.dci.rnti)) on_dci(tx, now);
    return;
  }
  auto it = std::find_if(pdsch_expect_.begin(), pdsch_expect_.end(),
                         [&](const PdschExpect& e) { return e.rnti == tx.pdu.rnti && e.start == tx.start; });
  if (it == pdsch_expect_.end()) return;
  const PdschExpect expect = *it;
  pdsch_expect_.erase(it);
  auto d = radio_->decode_dl(tx, current_ce(), state_.nv.scrambling);
  if (tx.pdu.kind == fapi::PduKind::rar) {
    if (d.decoded()) {
      on_rar(d.payload, tx, now);
    } else {
      trace(now, TraceTag::rach, "RAR decode failed");
    }
    return;
  }
  bool ack = d.decoded();
  if (d.decoded()) {
    if (tx.pdu.kind == fapi::PduKind::msg4) {
      on_msg4(d.payload, now, ack);
    } else {
      try {
        auto pdu = air::decode_dl_mac(d.payload);
        on_rrc_dl(air::decode_rrc(pdu.sdu), now);
      } catch (const CodecError& e) {
        trace(now, TraceTag::warn, std::string("undecodable DL PDU: ") + e.what());
      }
    }
  }
  // A lost contention sends no HARQ feedback at all.
  if (tx.pdu.kind == fapi::PduKind::msg4 && d.decoded() && !ack) return;
  send_ack(tx.pdu.rnti, tx.end + static_cast<AbsSf>(expect.ack_delay), ack, now);
}

void Ue::on_dci(const phy::DlTransmission& tx, AbsSf now) {
  auto d = radio_->decode_dl(tx, current_ce(), state_.nv.scrambling);
  const auto& dci = tx.dci;
  const char* fmt = dci.format == fapi::DciFormat::n1_dl_assignment ? "N1" : "N0";
  if (!d.decoded()) {
    trace(now, TraceTag::dci, std::string(fmt) + " rnti=" + hex16(dci.rnti) + " decode failed");
    return;
  }
  trace(now, TraceTag::dci,
        std::string(fmt) + " rnti=" + hex16(dci.rnti) + " start=" + std::to_string(tx.start) +
            " delay=" + std::to_string(dci.data_delay) + " dur=" + std::to_string(dci.data_duration) +
            (dci.new_data ? "" : " retx"));
  const AbsSf data_start = tx.start + dci.data_delay;
  if (dci.format == fapi::DciFormat::n1_dl_assignment) {
    pdsch_expect_.push_back(PdschExpect{dci.rnti, data_start, dci.ack_delay});
    if (rach_ && rach_->step == RachStep::wait_rar && dci.rnti == rach_->ra_rnti) {
      rach_->rar_pdsch_end = data_start + dci.data_duration - 1;
    }
    return;
  }
  on_ul_grant(dci, data_start, now);
}

void Ue::on_rar(const Bytes& payload, const phy::DlTransmission& tx, AbsSf now) {
  if (!rach_ || rach_->step != RachStep::wait_rar) return;
  std::vector<air::RarEntry> entries;
  try {
    entries = air::decode_rar(payload);
  } catch (const CodecError& e) {
    trace(now, TraceTag::warn, std::string("undecodable RAR: ") + e.what());
    return;
  }
  auto& r = *rach_;
  auto it = std::find_if(entries.begin(), entries.end(),
                         [&](const air::RarEntry& e) { return e.rapid == r.subcarrier; });
  if (it == entries.end()) return;

  r.temp_crnti = it->temp_crnti;
  r.msg3_reps = it->msg3_repetitions;
  r.msg3_duration = it->msg3_duration;
  air::UlMacPdu pdu;
  if (r.purpose == RachPurpose::scheduling_request) {
    pdu.crnti = *crnti_;
    pdu.buffer_bytes = static_cast<std::uint16_t>(std::min<std::size_t>(buffered_bytes(), 0xffff));
  } else {
    const std::uint64_t identity = rng_() & 0xffffffffffULL;
    pdu.sdu = air::encode(air::RrcMessage{air::RrcConnectionRequest{identity, 0}});
  }
  r.contention_id = air::contention_id_of(pdu.sdu);
  r.msg3 = air::encode(pdu);

  const AbsSf msg3_start = tx.end + it->msg3_delay;
  phy::UlTransmission t;
  t.ue_id = params_.id;
  t.rnti = r.temp_crnti;
  t.start = msg3_start;
  t.duration = r.msg3_duration;
  t.repetitions = r.msg3_reps;
  t.ce_level = r.ce;
  t.payload = r.msg3;
  t.crc_bug_length = 0;
  pending_tx_.push_back(t);
  r.step = RachStep::wait_msg4;
  const auto period = static_cast<AbsSf>(cell_->css.period());
  r.cr_deadline = msg3_start + static_cast<AbsSf>(r.msg3_duration) +
                  static_cast<AbsSf>(cell_->rach[static_cast<std::size_t>(r.ce)].contention_resolution_timer) * period;
  trace(now, TraceTag::rach,
        "RAR received tc-rnti=" + hex16(r.temp_crnti) + " msg3 at " + std::to_string(msg3_start));
}

void Ue::on_msg4(const Bytes& payload, AbsSf now, bool& ack) {
  ack = false;
  if (!rach_ || rach_->step != RachStep::wait_msg4) return;
  air::DlMacPdu pdu;
  try {
    pdu = air::decode_dl_mac(payload);
  } catch (const CodecError&) {
    return;
  }
  if (!pdu.contention_id || *pdu.contention_id != rach_->contention_id) {
    rach_attempt_failed(now, "contention lost");
    return;
  }
  ack = true;
  crnti_ = rach_->temp_crnti;
  trace(now, TraceTag::rach, "contention resolved (Msg4 identity match)");
  rach_succeeded(now);
  state_.phase = Phase::rrc_connected;
  try {
    on_rrc_dl(air::decode_rrc(pdu.sdu), now);
  } catch (const CodecError& e) {
    trace(now, TraceTag::warn, std::string("undecodable Msg4 SDU: ") + e.what());
  }
}

void Ue::send_ack(std::uint16_t rnti, AbsSf start, bool ack, AbsSf now) {
  const int reps = cell_->rach[static_cast<std::size_t>(current_ce())].npusch_repetitions;
  phy::UlTransmission t;
  t.ue_id = params_.id;
  t.rnti = rnti;
  t.kind = fapi::UlKind::harq_ack;
  t.start = start;
  t.duration = cell_->mac.harq_ack_duration * reps;
  t.repetitions = reps;
  t.ce_level = current_ce();
  t.ack = ack;
  pending_tx_.push_back(t);
  trace(now, TraceTag::harq, std::string(ack ? "ACK" : "NACK") + " rnti=" + hex16(rnti) + " at " + std::to_string(start));
}

void Ue::on_ul_grant(const fapi::Dci& dci, AbsSf start, AbsSf now) {
  if (rach_ && rach_->step == RachStep::wait_msg4) {
    if (rach_->purpose == RachPurpose::attach && dci.rnti == rach_->temp_crnti) {
      // Msg3 retransmission request.
      phy::UlTransmission t;
      t.ue_id = params_.id;
      t.rnti = rach_->temp_crnti;
      t.start = start;
      t.duration = dci.data_duration;
      t.repetitions = dci.data_repetitions;
      t.ce_level = rach_->ce;
      t.payload = rach_->msg3;
      t.crc_bug_length = 0;
      pending_tx_.push_back(t);
      const auto period = static_cast<AbsSf>(cell_->css.period());
      rach_->cr_deadline = start + dci.data_duration +
                           static_cast<AbsSf>(cell_->rach[static_cast<std::size_t>(rach_->ce)].contention_resolution_timer) * period;
      trace(now, TraceTag::harq, "Msg3 retransmission at " + std::to_string(start));
      return;
    }
    if (rach_->purpose == RachPurpose::scheduling_request && crnti_ && dci.rnti == *crnti_) {
      trace(now, TraceTag::rach, "contention resolved (grant on C-RNTI)");
      rach_succeeded(now);
    }
  } else if (rach_ && rach_->purpose == RachPurpose::scheduling_request && crnti_ && dci.rnti == *crnti_) {
    // The network granted before the preamble was answered; random access is moot.
    trace(now, TraceTag::rach, "scheduling request cancelled by grant");
    rach_.reset();
    pdsch_expect_.clear();
  }
  if (!crnti_ || dci.rnti != *crnti_) return;

  phy::UlTransmission t;
  if (!dci.new_data && last_tb_) {
    t = *last_tb_;
    trace(now, TraceTag::harq, "UL retransmission requested rnti=" + hex16(dci.rnti));
  } else {
    air::UlMacPdu pdu;
    std::size_t user = 0;
    if (!ul_buffer_.empty() && ul_buffer_.front().rrc.size() + kUlMacOverhead <= dci.tbs_bytes) {
      pdu.sdu = std::move(ul_buffer_.front().rrc);
      user = ul_buffer_.front().user_bytes;
      ul_buffer_.pop_front();
    }
    pdu.buffer_bytes = static_cast<std::uint16_t>(std::min<std::size_t>(buffered_bytes(), 0xffff));
    t.ue_id = params_.id;
    t.rnti = dci.rnti;
    t.payload = air::encode(pdu);
    t.crc_bug_length = user;
  }
  t.start = start;
  t.duration = dci.data_duration;
  t.repetitions = dci.data_repetitions;
  t.ce_level = connected_ce_;
  last_tb_ = t;
  pending_tx_.push_back(t);
}

// --- RRC / NAS -----------------------------------------------------------------

void Ue::queue_ul_rrc(const air::RrcMessage& msg, std::size_t user_bytes) {
  ul_buffer_.push_back(UlSdu{air::encode(msg), user_bytes});
}

void Ue::send_nas(const nas::NasPdu& pdu, AbsSf now, std::size_t user_bytes) {
  trace(now, TraceTag::nas_dbg_nas_msg, "send " + std::string(nas::name_of(pdu)));
  queue_ul_rrc(air::UlInformationTransfer{nas::encode(pdu)}, user_bytes);
}

void Ue::on_rrc_dl(const air::RrcMessage& msg, AbsSf now) {
  trace(now, TraceTag::rrc_debug_asn, "rx " + std::string(air::name_of(msg)));
  if (std::holds_alternative<air::RrcConnectionSetup>(msg)) {
    nas::AttachRequest req{state_.imsi, state_.nv.pco_ie_epco ? nas::PcoType::epco : nas::PcoType::pco};
    trace(now, TraceTag::nas_dbg_nas_msg, "send AttachRequest imsi=" + state_.imsi);
    air::RrcConnectionSetupComplete done;
    done.release_version = static_cast<std::uint8_t>(state_.nv.release_version);
    done.multitone = state_.nv.multitone;
    done.nas = nas::encode(req);
    trace(now, TraceTag::rrc_debug_asn, "tx RRCConnectionSetupComplete-NB");
    queue_ul_rrc(done, 0);
  } else if (const auto* dl = std::get_if<air::DlInformationTransfer>(&msg)) {
    try {
      on_nas(nas::decode(dl->nas), now);
    } catch (const CodecError& e) {
      trace(now, TraceTag::warn, std::string("undecodable NAS: ") + e.what());
    }
  }
}

void Ue::on_nas(const nas::NasPdu& pdu, AbsSf now) {
  trace(now, TraceTag::nas_dbg_nas_msg, "recv " + std::string(nas::name_of(pdu)));
  if (std::holds_alternative<nas::IdentityRequest>(pdu)) {
    send_nas(nas::IdentityResponse{state_.imsi}, now);
  } else if (const auto* auth = std::get_if<nas::AuthenticationRequest>(&pdu)) {
    send_nas(nas::AuthenticationResponse{nas::auth_res(state_.k, auth->rand)}, now);
  } else if (std::holds_alternative<nas::AuthenticationReject>(pdu)) {
    ++stats_.attach_rejects;
    auto_attach_suppressed_ = true;
    state_.attach_requested = false;
    go_idle(now, "authentication rejected");
  } else if (std::holds_alternative<nas::SecurityModeCommand>(pdu)) {
    send_nas(nas::SecurityModeComplete{}, now);
  } else if (const auto* accept = std::get_if<nas::AttachAccept>(&pdu)) {
    state_.assigned_ip = accept->ip;
    state_.phase = Phase::attached;
    attach_started_.reset();
    trace(now, TraceTag::nas_dbg_nas_msg, "attached ip=" + accept->ip);
    send_nas(nas::AttachComplete{}, now);
  }
}

}  // namespace nbsim::ue
