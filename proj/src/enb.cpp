#include "nbsim/enb.hpp"

#include <algorithm>
#include <cstdio>
#include <iterator>

namespace nbsim::enb {

namespace {

std::string hex16(std::uint16_t v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "0x%04x", v);
  return buf;
}

AbsSf ceil_div(AbsSf a, AbsSf b) { return (a + b - 1) / b; }

}  // namespace

// --- CSS ---------------------------------------------------------------------

std::vector<AbsSf> css_start_subframes(const config::NpdcchCssConfig& css, AbsSf from, AbsSf to) {
  const auto period = static_cast<AbsSf>(css.period());
  std::vector<AbsSf> out;
  for (AbsSf n = next_css_start(css, from); n < to; n += period) out.push_back(n);
  return out;
}

bool is_css_start(const config::NpdcchCssConfig& css, AbsSf n) {
  return n % static_cast<AbsSf>(css.period()) == static_cast<AbsSf>(css.offset_sf());
}

AbsSf next_css_start(const config::NpdcchCssConfig& css, AbsSf from) {
  const auto period = static_cast<AbsSf>(css.period());
  const auto offset = static_cast<AbsSf>(css.offset_sf());
  const AbsSf base = from - from % period + offset;
  return base >= from ? base : base + period;
}

// --- Timeline ----------------------------------------------------------------

bool Timeline::is_free(AbsSf start, AbsSf length) const {
  if (length == 0) return true;
  const AbsSf end = start + length;
  auto it = busy_.lower_bound(start);
  if (it != busy_.end() && it->first < end) return false;
  if (it != busy_.begin() && std::prev(it)->second > start) return false;
  return true;
}

AbsSf Timeline::first_fit(AbsSf from, AbsSf length) const {
  if (length == 0) return from;
  AbsSf s = from;
  auto it = busy_.upper_bound(s);
  if (it != busy_.begin() && std::prev(it)->second > s) s = std::prev(it)->second;
  for (; it != busy_.end(); ++it) {
    if (it->first >= s + length) break;
    s = std::max(s, it->second);
  }
  return s;
}

void Timeline::reserve(AbsSf start, AbsSf length) {
  if (length == 0) return;
  if (!is_free(start, length)) {
    throw Error("timeline overlap reserving [" + std::to_string(start) + ", " + std::to_string(start + length) + ")");
  }
  busy_.emplace(start, start + length);
}

void Timeline::prune(AbsSf t) {
  for (auto it = busy_.begin(); it != busy_.end() && it->first < t;) {
    it = it->second <= t ? busy_.erase(it) : std::next(it);
  }
}

// --- Enb ---------------------------------------------------------------------

Enb::Enb(const config::EnbConfig& cfg, Trace* trace) : cfg_(&cfg), trace_(trace) { (void)cfg_->css.period(); }

void Enb::warn(AbsSf now, std::uint32_t entity, std::string text) {
  if (trace_ != nullptr) trace_->emit(now, TraceTag::warn, Component::rrc, entity, std::move(text));
}

void Enb::start(AbsSf now) {
  send_s1(s1ap::S1SetupRequest{cfg_->enb_id, cfg_->plmn}, now, 0);
}

bool Enb::is_connected(std::uint16_t rnti) const {
  auto it = ues_.find(rnti);
  return it != ues_.end() && it->second.state == UeState::connected;
}

void Enb::force_connected(std::uint16_t rnti, int ce_level) {
  auto& ue = ues_[rnti];
  ue.rnti = rnti;
  ue.ce = ce_level;
  ue.state = UeState::connected;
}

int Enb::ce_from_subcarrier(int subcarrier, int hint) const {
  for (int ce = 0; ce < config::kNumCeLevels; ++ce) {
    const auto& r = cfg_->rach[static_cast<std::size_t>(ce)].nprach;
    if (subcarrier >= r.subcarrier_offset && subcarrier < r.subcarrier_offset + r.num_subcarriers) return ce;
  }
  return std::clamp(hint, 0, config::kNumCeLevels - 1);
}

int Enb::dci_length(int ce) const {
  const int reps = cfg_->rach[static_cast<std::size_t>(ce)].npdsch_repetitions;
  return std::clamp(std::min(cfg_->css.r_max, reps), 1, 255);
}

int Enb::ul_duration(const UeCtx& ue, int tbs, bool msg3) const {
  const auto& mac = cfg_->mac;
  const int reps = cfg_->rach[static_cast<std::size_t>(ue.ce)].npusch_repetitions;
  const int n_ru = std::max(1, (tbs + mac.ul_bytes_per_ru - 1) / mac.ul_bytes_per_ru);
  int ru_len = cfg_->cell.subcarrier_spacing == config::SubcarrierSpacing::khz3_75 ? 32 : 8;
  if (!msg3 && ue.multitone) ru_len = 1;
  return reps * n_ru * ru_len;
}

std::uint16_t Enb::allocate_temp_crnti() {
  for (;;) {
    const std::uint16_t candidate = next_temp_crnti_;
    next_temp_crnti_ = next_temp_crnti_ >= 0xfff3 ? 0x0101 : static_cast<std::uint16_t>(next_temp_crnti_ + 1);
    if (ues_.count(candidate) == 0) return candidate;
  }
}

std::optional<Enb::DlPlacement> Enb::place_dl(bool css_only, int ce, std::size_t bytes, bool with_ack,
                                              AbsSf now) const {
  const auto& mac = cfg_->mac;
  const auto& rach = cfg_->rach[static_cast<std::size_t>(ce)];
  DlPlacement p;
  p.repetitions = rach.npdsch_repetitions;
  p.dci_len = dci_length(ce);
  p.pdsch_len = p.repetitions * static_cast<int>(std::max<AbsSf>(1, ceil_div(bytes, static_cast<AbsSf>(mac.dl_bytes_per_subframe))));
  p.ack_len = with_ack ? mac.harq_ack_duration * rach.npusch_repetitions : 0;

  AbsSf d = now;
  for (;;) {
    d = css_only ? next_css_start(cfg_->css, d) : dl_.first_fit(d, static_cast<AbsSf>(p.dci_len));
    if (d > horizon(now)) return std::nullopt;
    if (!dl_.is_free(d, static_cast<AbsSf>(p.dci_len))) {
      ++d;
      continue;
    }
    const AbsSf pdsch = dl_.first_fit(d + static_cast<AbsSf>(p.dci_len - 1 + mac.dci_to_data_gap),
                                      static_cast<AbsSf>(p.pdsch_len));
    if (pdsch > horizon(now)) return std::nullopt;
    if (pdsch - d > 0xffff) {
      ++d;
      continue;
    }
    p.dci_start = d;
    p.pdsch_start = pdsch;
    if (with_ack) {
      const AbsSf pdsch_last = pdsch + static_cast<AbsSf>(p.pdsch_len) - 1;
      p.ack_start = ul_.first_fit(pdsch_last + static_cast<AbsSf>(mac.harq_ack_delay), static_cast<AbsSf>(p.ack_len));
      if (p.ack_start - pdsch_last > 0xffff) return std::nullopt;
    }
    return p;
  }
}

void Enb::commit_dl(const DlPlacement& p, std::uint16_t rnti, fapi::PduKind kind, const Bytes& pdu,
                    const char* rnti_type) {
  dl_.reserve(p.dci_start, static_cast<AbsSf>(p.dci_len));
  dl_.reserve(p.pdsch_start, static_cast<AbsSf>(p.pdsch_len));
  fapi::Dci dci;
  dci.rnti = rnti;
  dci.format = fapi::DciFormat::n1_dl_assignment;
  dci.duration = static_cast<std::uint8_t>(p.dci_len);
  dci.data_delay = static_cast<std::uint16_t>(p.pdsch_start - p.dci_start);
  dci.data_duration = static_cast<std::uint16_t>(p.pdsch_len);
  dci.data_repetitions = static_cast<std::uint8_t>(p.repetitions);
  dci.tbs_bytes = static_cast<std::uint16_t>(pdu.size());
  if (p.ack_len > 0) {
    ul_.reserve(p.ack_start, static_cast<AbsSf>(p.ack_len));
    dci.ack_delay = static_cast<std::uint16_t>(p.ack_start - (p.pdsch_start + static_cast<AbsSf>(p.pdsch_len) - 1));
    ul_items_.emplace(p.ack_start, fapi::UlGrant{rnti, fapi::UlKind::harq_ack, static_cast<std::uint8_t>(p.ack_len / cfg_->mac.harq_ack_duration),
                                                 static_cast<std::uint16_t>(p.ack_len)});
  }
  dci_items_.emplace(p.dci_start, DciItem{dci, rnti_type});
  pdu_items_.emplace(p.pdsch_start, fapi::DlPdu{rnti, kind, static_cast<std::uint8_t>(p.repetitions),
                                                static_cast<std::uint16_t>(p.pdsch_len), pdu});
}

std::optional<phy::TransportBlock> Enb::schedule_dl(std::uint16_t rnti, const Bytes& payload, int ce_level,
                                                    AbsSf now) {
  auto p = place_dl(false, ce_level, payload.size(), true, now);
  if (!p) return std::nullopt;
  commit_dl(*p, rnti, fapi::PduKind::data, payload, "C");
  return phy::TransportBlock{phy::Direction::dl, rnti, payload, p->repetitions, ce_level, p->pdsch_start, std::nullopt};
}

bool Enb::schedule_ul_grant(UeCtx& ue, int tbs, bool new_data, AbsSf now) {
  const auto& mac = cfg_->mac;
  const bool css_only = ue.state != UeState::connected;
  const int dci_len = dci_length(ue.ce);
  const int dur = ul_duration(ue, tbs, ue.state == UeState::wait_msg3);
  AbsSf d = now;
  for (;;) {
    d = css_only ? next_css_start(cfg_->css, d) : dl_.first_fit(d, static_cast<AbsSf>(dci_len));
    if (d > horizon(now)) return false;
    if (!dl_.is_free(d, static_cast<AbsSf>(dci_len))) {
      ++d;
      continue;
    }
    const AbsSf u = ul_.first_fit(d + static_cast<AbsSf>(dci_len - 1 + mac.ul_grant_delay), static_cast<AbsSf>(dur));
    if (u > horizon(now) || u - d > 0xffff) return false;
    dl_.reserve(d, static_cast<AbsSf>(dci_len));
    ul_.reserve(u, static_cast<AbsSf>(dur));
    const int reps = cfg_->rach[static_cast<std::size_t>(ue.ce)].npusch_repetitions;
    fapi::Dci dci;
    dci.rnti = ue.rnti;
    dci.format = fapi::DciFormat::n0_ul_grant;
    dci.duration = static_cast<std::uint8_t>(dci_len);
    dci.data_delay = static_cast<std::uint16_t>(u - d);
    dci.data_duration = static_cast<std::uint16_t>(dur);
    dci.data_repetitions = static_cast<std::uint8_t>(reps);
    dci.tbs_bytes = static_cast<std::uint16_t>(tbs);
    dci.new_data = new_data;
    dci_items_.emplace(d, DciItem{dci, css_only ? "TC" : "C"});
    ul_items_.emplace(u, fapi::UlGrant{ue.rnti, fapi::UlKind::npusch, static_cast<std::uint8_t>(reps),
                                       static_cast<std::uint16_t>(dur)});
    ue.ul.active = true;
    ue.ul.tbs = tbs;
    if (new_data) ue.ul.retx = 0;
    ue.regrant.reset();
    return true;
  }
}

bool Enb::transmit_dl(UeCtx& ue, AbsSf now) {
  if (!ue.dl.active && !ue.dl_queue.empty()) {
    ue.dl = DlHarq{true, true, ue.dl_queue.front().kind, std::move(ue.dl_queue.front().mac_pdu), 0, false};
    ue.dl_queue.pop_front();
  }
  if (!ue.dl.active || !ue.dl.needs_tx) return false;
  const bool css_only = ue.state != UeState::connected;
  auto p = place_dl(css_only, ue.ce, ue.dl.mac_pdu.size(), true, now);
  if (!p) return false;  // backpressure: retried next subframe
  commit_dl(*p, ue.rnti, ue.dl.kind, ue.dl.mac_pdu, css_only ? "TC" : "C");
  ue.dl.needs_tx = false;
  ue.dl.awaiting_ack = true;
  return true;
}

std::optional<ScheduledRar> Enb::on_rach_indication(const fapi::RachIndication& ind, AbsSf now) {
  auto r = on_rach_indications({ind}, now);
  if (r.empty()) return std::nullopt;
  return r.front();
}

std::vector<ScheduledRar> Enb::on_rach_indications(const std::vector<fapi::RachIndication>& inds, AbsSf now) {
  // Detections of one occasion and CE level share an RA-RNTI and go out as one
  // multi-entry RAR.
  std::map<std::pair<AbsSf, int>, std::vector<fapi::RachIndication>> groups;
  for (const auto& ind : inds) {
    groups[{resolve_sfn_sf(now, ind.sfn, ind.sf), ce_from_subcarrier(ind.subcarrier, ind.ce_level_hint)}].push_back(ind);
  }
  std::vector<ScheduledRar> out;
  for (const auto& [key, members] : groups) {
    auto r = schedule_rar(key.first, key.second, members, now);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

std::vector<ScheduledRar> Enb::schedule_rar(AbsSf end, int ce, const std::vector<fapi::RachIndication>& members,
                                           AbsSf now) {
  const auto& mac = cfg_->mac;
  const auto& rach = cfg_->rach[static_cast<std::size_t>(ce)];
  const AbsSf occasion = end + 1 - static_cast<AbsSf>(rach.preamble_duration_sf());
  const std::uint16_t ra_rnti = ra_rnti_for(occasion);
  const auto window = static_cast<AbsSf>(rach.response_window) * static_cast<AbsSf>(cfg_->css.period());
  const AbsSf window_last = end + window;

  UeCtx probe;
  probe.ce = ce;
  const auto msg3_dur = static_cast<AbsSf>(ul_duration(probe, mac.msg3_tbs_bytes, true));
  const std::size_t rar_bytes = 1 + air::kRarEntrySize * members.size();
  const int region_lo = rach.msg3_first_subcarrier();
  const int region_hi = rach.nprach.subcarrier_offset + rach.nprach.num_subcarriers;

  std::vector<ScheduledRar> out;
  for (AbsSf c : css_start_subframes(cfg_->css, std::max(now, end + static_cast<AbsSf>(mac.rar_min_delay)), window_last + 1)) {
    auto p = place_dl(false, ce, rar_bytes, false, c);
    if (!p || p->dci_start != c) continue;
    const AbsSf pdsch_last = p->pdsch_start + static_cast<AbsSf>(p->pdsch_len) - 1;

    // Msg3 slots back to back on the UL timeline, one per entry.
    Timeline probe_ul = ul_;
    std::vector<AbsSf> msg3;
    for (std::size_t i = 0; i < members.size(); ++i) {
      const AbsSf m = probe_ul.first_fit(pdsch_last + static_cast<AbsSf>(mac.msg3_delay), msg3_dur);
      if (m - pdsch_last > 0xffff) break;
      probe_ul.reserve(m, msg3_dur);
      msg3.push_back(m);
    }
    if (msg3.size() != members.size()) continue;

    std::vector<air::RarEntry> entries;
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto& ind = members[i];
      const std::uint16_t temp = allocate_temp_crnti();
      const int msg3_sc = region_lo < region_hi
                              ? region_lo + (ind.subcarrier - rach.nprach.subcarrier_offset) % (region_hi - region_lo)
                              : ind.subcarrier;
      air::RarEntry entry;
      entry.rapid = ind.subcarrier;
      entry.temp_crnti = temp;
      entry.msg3_delay = static_cast<std::uint16_t>(msg3[i] - pdsch_last);
      entry.msg3_subcarrier = static_cast<std::uint8_t>(msg3_sc);
      entry.msg3_repetitions = static_cast<std::uint8_t>(rach.npusch_repetitions);
      entry.msg3_duration = static_cast<std::uint16_t>(msg3_dur);
      entry.msg3_tbs = static_cast<std::uint16_t>(mac.msg3_tbs_bytes);
      entries.push_back(entry);

      ul_.reserve(msg3[i], msg3_dur);
      ul_items_.emplace(msg3[i], fapi::UlGrant{temp, fapi::UlKind::npusch, entry.msg3_repetitions, entry.msg3_duration});
      auto& ue = ues_[temp];
      ue.rnti = temp;
      ue.ce = ce;
      ue.state = UeState::wait_msg3;
      ue.ul.active = true;
      ue.ul.tbs = mac.msg3_tbs_bytes;
      ++stats_.rars_scheduled;
      if (trace_ != nullptr) {
        trace_->emit(now, TraceTag::rach, Component::mac, temp,
                     "RAR ra-rnti=" + hex16(ra_rnti) + " tc-rnti=" + hex16(temp) + " ce=" + std::to_string(ce) +
                         " sc=" + std::to_string(ind.subcarrier) + " preamble_end=" + std::to_string(end) +
                         " dci=" + std::to_string(c) + " msg3=" + std::to_string(msg3[i]));
      }
      out.push_back(ScheduledRar{end, c, p->pdsch_start, ce,
                                 RarGrant{ra_rnti, temp, 0, msg3_sc, msg3[i], rach.npusch_repetitions}});
    }
    commit_dl(*p, ra_rnti, fapi::PduKind::rar, air::encode_rar(entries), "RA");
    return out;
  }
  stats_.rars_dropped += members.size();
  if (trace_ != nullptr) {
    for (const auto& ind : members) {
      trace_->emit(now, TraceTag::rach, Component::mac, 0,
                   "RAR dropped ra-rnti=" + hex16(ra_rnti) + " sc=" + std::to_string(ind.subcarrier) +
                       ": no free CSS candidate before " + std::to_string(window_last + 1));
    }
  }
  return out;
}

void Enb::on_msg3(std::uint16_t rnti, const Bytes& payload, AbsSf now) {
  auto it = ues_.find(rnti);
  if (it == ues_.end()) {
    warn(now, rnti, "Msg3 for unknown tc-rnti " + hex16(rnti) + " ignored");
    return;
  }
  auto& ue = it->second;
  if (ue.state != UeState::wait_msg3) {
    if (trace_ != nullptr) trace_->emit(now, TraceTag::rach, Component::mac, rnti, "duplicate Msg3 ignored");
    return;
  }
  ue.ul = UlHarq{};
  air::UlMacPdu pdu;
  try {
    pdu = air::decode_ul_mac(payload);
  } catch (const CodecError& e) {
    release(rnti, now, std::string("undecodable Msg3: ") + e.what());
    return;
  }

  if (pdu.crnti) {
    // Random access by a connected UE that needs an uplink grant.
    const std::uint16_t crnti = *pdu.crnti;
    release(rnti, now, "Msg3 carries C-RNTI " + hex16(crnti));
    auto target = ues_.find(crnti);
    if (target == ues_.end() || target->second.state != UeState::connected) {
      warn(now, crnti, "C-RNTI MAC CE for unknown rnti " + hex16(crnti));
      return;
    }
    auto& t = target->second;
    t.buffer_bytes = pdu.buffer_bytes;
    if (trace_ != nullptr) {
      trace_->emit(now, TraceTag::rach, Component::mac, crnti,
                   "contention resolved via C-RNTI " + hex16(crnti) + " bsr=" + std::to_string(pdu.buffer_bytes));
    }
    if (!t.ul.active) {
      const int tbs = std::min(t.buffer_bytes + 3, cfg_->mac.max_tbs_bytes);
      if (!schedule_ul_grant(t, tbs, true, now)) t.regrant = tbs;
    }
    return;
  }

  air::RrcMessage rrc;
  try {
    rrc = air::decode_rrc(pdu.sdu);
  } catch (const CodecError& e) {
    release(rnti, now, std::string("undecodable Msg3 SDU: ") + e.what());
    return;
  }
  if (!std::holds_alternative<air::RrcConnectionRequest>(rrc)) {
    release(rnti, now, "Msg3 without RRCConnectionRequest");
    return;
  }
  ue.contention_id = air::contention_id_of(pdu.sdu);
  ue.state = UeState::contention;
  ue.contention_deadline = now + static_cast<AbsSf>(cfg_->rach[static_cast<std::size_t>(ue.ce)].contention_resolution_timer) *
                                     static_cast<AbsSf>(cfg_->css.period());
  if (trace_ != nullptr) {
    trace_->emit(now, TraceTag::rach, Component::mac, rnti,
                 "Msg3 received tc-rnti=" + hex16(rnti) + " contention timer until " +
                     std::to_string(ue.contention_deadline));
  }
  rrc_handle_ul(ue, rrc, now);
}

void Enb::on_harq(std::uint16_t rnti, bool ack, AbsSf now) {
  auto it = ues_.find(rnti);
  if (it == ues_.end() || !it->second.dl.awaiting_ack) return;
  auto& ue = it->second;
  ue.dl.awaiting_ack = false;
  auto emit = [&](TraceTag tag, std::string text) {
    if (trace_ != nullptr) trace_->emit(now, tag, Component::mac, rnti, std::move(text));
  };
  if (ack) {
    emit(TraceTag::harq, "DL ACK rnti=" + hex16(rnti));
    const auto kind = ue.dl.kind;
    ue.dl = DlHarq{};
    if (kind == fapi::PduKind::msg4 && ue.state == UeState::contention) {
      ue.state = UeState::connected;
      emit(TraceTag::rach, "contention resolved rnti=" + hex16(rnti) + " (Msg4 acknowledged)");
      ue.poll_at = now;
    } else if (kind == fapi::PduKind::data) {
      ue.poll_at = now + static_cast<AbsSf>(cfg_->mac.ul_poll_delay);
    }
    return;
  }
  emit(TraceTag::harq, "DL NACK rnti=" + hex16(rnti) + " retx=" + std::to_string(ue.dl.retx));
  if (ue.dl.retx < cfg_->mac.max_harq_retx) {
    ++ue.dl.retx;
    ue.dl.needs_tx = true;
  } else {
    emit(TraceTag::harq, "DL HARQ gave up rnti=" + hex16(rnti) + " after " + std::to_string(ue.dl.retx) +
                             " retransmissions");
    ue.dl = DlHarq{};
  }
}

void Enb::on_rx(std::uint16_t rnti, const Bytes& payload, AbsSf now) {
  auto it = ues_.find(rnti);
  if (it == ues_.end()) {
    warn(now, rnti, "uplink data for unknown rnti " + hex16(rnti) + " discarded");
    return;
  }
  auto& ue = it->second;
  if (ue.state == UeState::wait_msg3) {
    on_msg3(rnti, payload, now);
    return;
  }
  if (ue.state != UeState::connected) return;
  ue.ul = UlHarq{};
  air::UlMacPdu pdu;
  try {
    pdu = air::decode_ul_mac(payload);
  } catch (const CodecError& e) {
    warn(now, rnti, std::string("undecodable UL MAC PDU: ") + e.what());
    return;
  }
  ue.buffer_bytes = pdu.buffer_bytes;
  if (!pdu.sdu.empty()) {
    try {
      rrc_handle_ul(ue, air::decode_rrc(pdu.sdu), now);
    } catch (const CodecError& e) {
      warn(now, rnti, std::string("undecodable UL RRC message: ") + e.what());
    }
  }
  if (ue.buffer_bytes > 0 && !ue.ul.active) {
    const int tbs = std::min(ue.buffer_bytes + 3, cfg_->mac.max_tbs_bytes);
    if (!schedule_ul_grant(ue, tbs, true, now)) ue.regrant = tbs;
  }
}

void Enb::on_crc(std::uint16_t rnti, bool pass, AbsSf now) {
  auto it = ues_.find(rnti);
  if (it == ues_.end()) return;
  auto& ue = it->second;
  auto emit = [&](std::string text) {
    if (trace_ != nullptr) trace_->emit(now, TraceTag::harq, Component::mac, rnti, std::move(text));
  };
  if (pass) {
    emit("UL ACK rnti=" + hex16(rnti) + " (CRC ok)");
    return;
  }
  if (!ue.ul.active) return;
  emit("UL NACK rnti=" + hex16(rnti) + " retx=" + std::to_string(ue.ul.retx) + " (CRC fail)");
  ue.ul.active = false;
  if (ue.ul.retx < cfg_->mac.max_harq_retx) {
    ++ue.ul.retx;
    if (!schedule_ul_grant(ue, ue.ul.tbs, false, now)) {
      ue.regrant = ue.ul.tbs;
      ue.regrant_new_data = false;
    }
    return;
  }
  emit("UL HARQ gave up rnti=" + hex16(rnti) + " after " + std::to_string(ue.ul.retx) + " retransmissions");
  ue.ul = UlHarq{};
  if (ue.state == UeState::wait_msg3) release(rnti, now, "Msg3 lost");
}

void Enb::on_indication(const fapi::FapiMessage& msg, AbsSf now) {
  if (const auto* rach = std::get_if<fapi::RachIndication>(&msg)) {
    pending_rach_.push_back(*rach);
  } else if (const auto* rx = std::get_if<fapi::RxIndication>(&msg)) {
    on_rx(rx->rnti, rx->payload, now);
  } else if (const auto* crc = std::get_if<fapi::CrcIndication>(&msg)) {
    on_crc(crc->rnti, crc->pass, now);
  } else if (const auto* harq = std::get_if<fapi::HarqIndication>(&msg)) {
    on_harq(harq->rnti, harq->ack, now);
  }
}

// --- RRC ---------------------------------------------------------------------

void Enb::send_rrc_dl(UeCtx& ue, const air::RrcMessage& msg, AbsSf now) {
  if (trace_ != nullptr) {
    trace_->emit(now, TraceTag::rrc_debug_asn, Component::rrc, ue.rnti,
                 "tx " + std::string(air::name_of(msg)) + " rnti=" + hex16(ue.rnti));
  }
  air::DlMacPdu pdu;
  pdu.sdu = air::encode(msg);
  fapi::PduKind kind = fapi::PduKind::data;
  if (std::holds_alternative<air::RrcConnectionSetup>(msg)) {
    pdu.contention_id = ue.contention_id;
    kind = fapi::PduKind::msg4;
  }
  ue.dl_queue.push_back(PendingDl{kind, air::encode(pdu)});
}

void Enb::rrc_handle_ul(UeCtx& ue, const air::RrcMessage& msg, AbsSf now) {
  if (trace_ != nullptr) {
    trace_->emit(now, TraceTag::rrc_debug_asn, Component::rrc, ue.rnti,
                 "rx " + std::string(air::name_of(msg)) + " rnti=" + hex16(ue.rnti));
  }
  if (std::holds_alternative<air::RrcConnectionRequest>(msg)) {
    send_rrc_dl(ue, air::RrcConnectionSetup{0}, now);
  } else if (const auto* done = std::get_if<air::RrcConnectionSetupComplete>(&msg)) {
    ue.multitone = done->multitone;
    if (!s1_ready_) {
      warn(now, ue.rnti, "S1 not established, InitialUEMessage not sent");
      return;
    }
    if (ue.enb_ue_id) {
      warn(now, ue.rnti, "repeated RRCConnectionSetupComplete ignored");
      return;
    }
    ue.enb_ue_id = next_enb_ue_id_++;
    ++stats_.initial_ue_messages;
    send_s1(s1ap::InitialUeMessage{*ue.enb_ue_id, done->nas}, now, *ue.enb_ue_id);
  } else if (const auto* ul = std::get_if<air::UlInformationTransfer>(&msg)) {
    if (!ue.enb_ue_id || !ue.mme_ue_id) {
      warn(now, ue.rnti, "NAS for UE without S1 context discarded");
      return;
    }
    send_s1(s1ap::UplinkNasTransport{s1ap::UeIds{*ue.mme_ue_id, *ue.enb_ue_id}, ul->nas}, now, *ue.enb_ue_id);
  } else {
    warn(now, ue.rnti, "unexpected uplink " + std::string(air::name_of(msg)));
  }
}

void Enb::on_s1(const s1ap::S1apMessage& msg, AbsSf now) {
  if (std::holds_alternative<s1ap::S1SetupResponse>(msg)) {
    s1_ready_ = true;
    return;
  }
  const auto* dl = std::get_if<s1ap::DownlinkNasTransport>(&msg);
  if (dl == nullptr) {
    warn(now, 0, "unexpected " + std::string(s1ap::name_of(msg)) + " from MME");
    return;
  }
  for (auto& [rnti, ue] : ues_) {
    if (ue.enb_ue_id == dl->ids.enb_ue_id && ue.state == UeState::connected) {
      ue.mme_ue_id = dl->ids.mme_ue_id;
      send_rrc_dl(ue, air::DlInformationTransfer{dl->nas}, now);
      return;
    }
  }
  warn(now, dl->ids.enb_ue_id, "DownlinkNASTransport for unknown UE context discarded");
}

void Enb::send_s1(s1ap::S1apMessage msg, AbsSf now, std::uint32_t entity) {
  if (trace_ != nullptr) trace_->emit(now, TraceTag::s1ap, Component::rrc, entity, s1ap::describe(msg));
  s1_outbox_.push_back(std::move(msg));
}

std::vector<s1ap::S1apMessage> Enb::take_s1_outbox() { return std::exchange(s1_outbox_, {}); }

void Enb::release(std::uint16_t rnti, AbsSf now, const std::string& why) {
  if (trace_ != nullptr) {
    trace_->emit(now, TraceTag::rach, Component::mac, rnti, "rnti " + hex16(rnti) + " released: " + why);
  }
  ues_.erase(rnti);
}

// --- per-subframe ------------------------------------------------------------

std::vector<fapi::FapiMessage> Enb::end_subframe(AbsSf now) {
  if (!pending_rach_.empty()) {
    on_rach_indications(pending_rach_, now);
    pending_rach_.clear();
  }

  std::vector<std::uint16_t> expired;
  for (const auto& [rnti, ue] : ues_) {
    if (ue.state == UeState::contention && ue.contention_deadline <= now) expired.push_back(rnti);
  }
  for (auto rnti : expired) {
    ++stats_.contention_timeouts;
    release(rnti, now, "contention resolution timer expired");
  }

  for (auto& [rnti, ue] : ues_) {
    if (ue.regrant && !ue.ul.active) {
      const bool nd = ue.regrant_new_data;
      if (schedule_ul_grant(ue, *ue.regrant, nd, now)) ue.regrant_new_data = true;
    }
    if (ue.state == UeState::connected && ue.poll_at && *ue.poll_at <= now) {
      if (ue.ul.active || ue.regrant || schedule_ul_grant(ue, cfg_->mac.ul_poll_bytes, true, now)) ue.poll_at.reset();
    }
    transmit_dl(ue, now);
  }

  const auto clk = from_abs(now);
  fapi::DlConfigRequest dl{clk.sfn, clk.sf, {}, {}};
  fapi::UlConfigRequest ul{clk.sfn, clk.sf, {}};
  for (auto it = dci_items_.begin(); it != dci_items_.end() && it->first <= now;) {
    if (it->first == now) {
      const auto& d = it->second.dci;
      if (trace_ != nullptr) {
        trace_->emit(now, TraceTag::dci, Component::mac, d.rnti,
                     std::string(d.format == fapi::DciFormat::n1_dl_assignment ? "N1" : "N0") + " rnti=" +
                         hex16(d.rnti) + " type=" + it->second.rnti_type + " len=" + std::to_string(d.duration) +
                         " delay=" + std::to_string(d.data_delay) + " dur=" + std::to_string(d.data_duration) +
                         " tbs=" + std::to_string(d.tbs_bytes) + (d.new_data ? "" : " retx"));
      }
      dl.dci_list.push_back(d);
    }
    it = dci_items_.erase(it);
  }
  for (auto it = pdu_items_.begin(); it != pdu_items_.end() && it->first <= now;) {
    if (it->first == now) dl.pdu_list.push_back(std::move(it->second));
    it = pdu_items_.erase(it);
  }
  for (auto it = ul_items_.begin(); it != ul_items_.end() && it->first <= now;) {
    if (it->first == now) ul.grants.push_back(it->second);
    it = ul_items_.erase(it);
  }
  if (now > 0) {
    dl_.prune(now);
    ul_.prune(now);
  }
  return {std::move(dl), std::move(ul)};
}

}  // namespace nbsim::enb
