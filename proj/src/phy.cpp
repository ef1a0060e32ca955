#include "nbsim/phy.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace nbsim::phy {

void DecodeModel::validate() const {
  for (int ce = 0; ce < config::kNumCeLevels; ++ce) {
    const double p = loss_prob[static_cast<std::size_t>(ce)];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError("loss probability for CE level " + std::to_string(ce) + " must lie in [0,1]");
    }
    const int r = required_reps[static_cast<std::size_t>(ce)];
    if (r < 1) throw ConfigError("required repetitions must be >= 1");
    if (ce > 0 && r < required_reps[static_cast<std::size_t>(ce - 1)]) {
      throw ConfigError("required repetitions must be non-decreasing in CE level");
    }
  }
}

PhyModel::PhyModel(DecodeModel model) : model_(std::move(model)), rng_(model_.rng_seed) { model_.validate(); }

double PhyModel::draw() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

bool PhyModel::detect_preamble(const PreambleTx& tx) {
  const double u = draw();
  if (script_pos_ < model_.preamble_script.size()) return model_.preamble_script[script_pos_++];
  const auto ce = static_cast<std::size_t>(std::clamp(tx.ce_level, 0, config::kNumCeLevels - 1));
  return tx.repetitions >= model_.required_reps[ce] && u >= model_.loss_prob[ce];
}

std::vector<Detection> PhyModel::detect_occasion(std::vector<PreambleTx> txs) {
  std::sort(txs.begin(), txs.end(), [](const PreambleTx& a, const PreambleTx& b) {
    return std::tie(a.start, a.subcarrier, a.ue_id) < std::tie(b.start, b.subcarrier, b.ue_id);
  });
  std::vector<Detection> out;
  for (std::size_t i = 0; i < txs.size();) {
    std::size_t j = i;
    bool detected = false;
    Detection d;
    d.start = txs[i].start;
    d.subcarrier = txs[i].subcarrier;
    d.ce_level = txs[i].ce_level;
    int longest = 1;
    while (j < txs.size() && txs[j].start == txs[i].start && txs[j].subcarrier == txs[i].subcarrier) {
      detected = detect_preamble(txs[j]) || detected;
      d.ue_ids.push_back(txs[j].ue_id);
      longest = std::max(longest, preamble_duration_sf(txs[j].repetitions));
      ++j;
    }
    d.end = d.start + static_cast<AbsSf>(longest) - 1;
    if (detected) out.push_back(std::move(d));
    i = j;
  }
  return out;
}

Delivery PhyModel::deliver(const TransportBlock& tb, bool scrambling_match) {
  const double u = draw();
  if (model_.crc_bug_enabled && tb.direction == Direction::ul &&
      tb.crc_bug_length.value_or(tb.payload.size()) > kCrcBugThreshold) {
    if (!model_.crc_recovery_enabled) return {Outcome::crc_fail, {}};
    return {Outcome::decoded, tb.payload};
  }
  if (!scrambling_match) return {Outcome::crc_fail, {}};
  const auto ce = static_cast<std::size_t>(std::clamp(tb.ce_level, 0, config::kNumCeLevels - 1));
  if (tb.repetitions >= model_.required_reps[ce] && u >= model_.loss_prob[ce]) {
    return {Outcome::decoded, tb.payload};
  }
  return {Outcome::crc_fail, {}};
}

// --- Radio -------------------------------------------------------------------

Radio::Radio(const config::EnbConfig& cfg, DecodeModel model, Trace* trace)
    : cfg_(&cfg), phy_(std::move(model)), trace_(trace, Component::phy, 0) {}

void Radio::transmit_preamble(const PreambleTx& tx) {
  const auto& res = cfg_->rach.at(static_cast<std::size_t>(tx.ce_level)).nprach;
  if (tx.subcarrier < res.subcarrier_offset || tx.subcarrier >= res.subcarrier_offset + res.num_subcarriers) {
    throw Error("preamble subcarrier " + std::to_string(tx.subcarrier) + " outside the CE" +
                std::to_string(tx.ce_level) + " NPRACH region");
  }
  preambles_.push_back(tx);
  ++preambles_total_;
}

void Radio::transmit_ul(UlTransmission tx) { ul_.push_back(std::move(tx)); }

std::vector<fapi::FapiMessage> Radio::uplink_indications(AbsSf now) {
  std::vector<fapi::FapiMessage> out;

  // Preambles that ended at now-1.
  std::vector<PreambleTx> done;
  std::erase_if(preambles_, [&](const PreambleTx& p) {
    if (p.start + static_cast<AbsSf>(preamble_duration_sf(p.repetitions)) != now) return false;
    done.push_back(p);
    return true;
  });
  if (!done.empty()) {
    std::map<std::pair<AbsSf, int>, std::vector<std::uint32_t>> sent;
    for (const auto& p : done) sent[{p.start, p.subcarrier}].push_back(p.ue_id);
    auto detections = phy_.detect_occasion(done);
    for (const auto& d : detections) {
      sent.erase({d.start, d.subcarrier});
      const auto clk = from_abs(d.end);
      out.emplace_back(fapi::RachIndication{clk.sfn, clk.sf, static_cast<std::uint8_t>(d.subcarrier),
                                            static_cast<std::uint8_t>(d.ce_level)});
      std::ostringstream os;
      os << "NPRACH detected sc=" << d.subcarrier << " ce=" << d.ce_level << " end=" << d.end << " ues=";
      for (std::size_t i = 0; i < d.ue_ids.size(); ++i) os << (i ? "," : "") << d.ue_ids[i];
      if (d.ue_ids.size() > 1) os << " collision";
      trace_(now, TraceTag::rach, os.str());
    }
    for (const auto& [key, ues] : sent) {
      for (auto ue : ues) {
        trace_(now, TraceTag::rach,
               "NPRACH missed sc=" + std::to_string(key.second) + " ue=" + std::to_string(ue));
      }
    }
  }

  // Uplink receptions that ended at now-1.
  std::vector<Expected> due;
  std::erase_if(expected_, [&](const Expected& e) {
    if (e.end + 1 != now) return false;
    due.push_back(e);
    return true;
  });
  std::stable_sort(due.begin(), due.end(), [](const Expected& a, const Expected& b) {
    return std::tie(a.start, a.grant.rnti) < std::tie(b.start, b.grant.rnti);
  });
  for (const auto& e : due) {
    const UlTransmission* best = nullptr;
    for (const auto& tx : ul_) {
      if (tx.rnti == e.grant.rnti && tx.kind == e.grant.kind && tx.start == e.start &&
          (best == nullptr || tx.ue_id < best->ue_id)) {
        best = &tx;
      }
    }
    const bool is_ack = e.grant.kind == fapi::UlKind::harq_ack;
    if (best == nullptr) {
      if (is_ack) {
        out.emplace_back(fapi::HarqIndication{e.grant.rnti, false});
      } else {
        out.emplace_back(fapi::CrcIndication{e.grant.rnti, false});
      }
      continue;
    }
    TransportBlock tb{Direction::ul, best->rnti, best->payload, best->repetitions, best->ce_level, best->start,
                      best->crc_bug_length};
    if (is_ack) tb.crc_bug_length = 0;
    auto result = phy_.deliver(tb);
    if (is_ack) {
      out.emplace_back(fapi::HarqIndication{e.grant.rnti, result.decoded() && best->ack});
    } else if (result.decoded()) {
      out.emplace_back(fapi::RxIndication{e.grant.rnti, std::move(result.payload)});
      out.emplace_back(fapi::CrcIndication{e.grant.rnti, true});
    } else {
      out.emplace_back(fapi::CrcIndication{e.grant.rnti, false});
    }
  }
  // Anything ended and not claimed by a grant is lost.
  std::erase_if(ul_, [&](const UlTransmission& tx) {
    return tx.start + static_cast<AbsSf>(std::max(tx.duration, 1)) <= now;
  });

  completed_dl_.clear();
  std::erase_if(dl_, [&](const DlTransmission& t) {
    if (t.end + 1 > now) return false;
    if (t.end + 1 == now) completed_dl_.push_back(t);
    return true;
  });
  std::stable_sort(completed_dl_.begin(), completed_dl_.end(),
                   [](const DlTransmission& a, const DlTransmission& b) { return a.start < b.start; });

  const auto clk = from_abs(now);
  out.emplace_back(fapi::SubframeIndication{clk.sfn, clk.sf});
  return out;
}

void Radio::apply(const fapi::FapiMessage& msg, AbsSf now) {
  if (const auto* dl = std::get_if<fapi::DlConfigRequest>(&msg)) {
    for (const auto& d : dl->dci_list) {
      DlTransmission t;
      t.kind = DlTransmission::Kind::dci;
      t.start = now;
      t.end = now + std::max<AbsSf>(d.duration, 1) - 1;
      t.dci = d;
      dl_.push_back(std::move(t));
    }
    for (const auto& p : dl->pdu_list) {
      DlTransmission t;
      t.kind = DlTransmission::Kind::pdsch;
      t.start = now;
      t.end = now + std::max<AbsSf>(p.duration, 1) - 1;
      t.pdu = p;
      dl_.push_back(std::move(t));
    }
  } else if (const auto* ul = std::get_if<fapi::UlConfigRequest>(&msg)) {
    for (const auto& g : ul->grants) {
      expected_.push_back(Expected{g, now, now + std::max<AbsSf>(g.duration, 1) - 1});
    }
  }
}

Delivery Radio::decode_dl(const DlTransmission& tx, int ce_level, bool ue_scrambling) {
  TransportBlock tb;
  tb.direction = Direction::dl;
  tb.rnti = tx.rnti();
  tb.ce_level = ce_level;
  tb.start = tx.start;
  if (tx.kind == DlTransmission::Kind::dci) {
    tb.repetitions = tx.dci.duration;
  } else {
    tb.repetitions = tx.pdu.repetitions;
    tb.payload = tx.pdu.payload;
  }
  return phy_.deliver(tb, ue_scrambling == cfg_->cell.scrambling);
}

}  // namespace nbsim::phy
