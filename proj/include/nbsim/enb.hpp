#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nbsim/air.hpp"
#include "nbsim/config.hpp"
#include "nbsim/fapi.hpp"
#include "nbsim/phy.hpp"
#include "nbsim/s1ap.hpp"
#include "nbsim/trace.hpp"

namespace nbsim::enb {

/// All n in [from, to) with n mod T == floor(offset * T), T = r_max * G.
/// Throws ConfigError when T is not an integer.
std::vector<AbsSf> css_start_subframes(const config::NpdcchCssConfig& css, AbsSf from, AbsSf to);
bool is_css_start(const config::NpdcchCssConfig& css, AbsSf n);
/// Smallest CSS start >= from.
AbsSf next_css_start(const config::NpdcchCssConfig& css, AbsSf from);

/// RA-RNTI of the NPRACH occasion starting at `occasion_start`.
constexpr std::uint16_t ra_rnti_for(AbsSf occasion_start) {
  return static_cast<std::uint16_t>(1 + (occasion_start / 40) % 1023);
}

/// Occupancy of one channel over absolute subframes; intervals never overlap.
class Timeline {
 public:
  bool is_free(AbsSf start, AbsSf length) const;
  /// Earliest s >= from such that [s, s + length) is free.
  AbsSf first_fit(AbsSf from, AbsSf length) const;
  /// Throws Error when the interval overlaps an existing reservation.
  void reserve(AbsSf start, AbsSf length);
  /// Forgets reservations that ended at or before `t`.
  void prune(AbsSf t);
  /// start -> end (exclusive)
  const std::map<AbsSf, AbsSf>& intervals() const noexcept { return busy_; }

 private:
  std::map<AbsSf, AbsSf> busy_;
};

struct RarGrant {
  std::uint16_t ra_rnti = 0;
  std::uint16_t temp_crnti = 0;
  std::uint16_t timing_advance = 0;
  int msg3_subcarrier = 0;
  AbsSf msg3_start = 0;
  int msg3_repetitions = 1;
};

struct ScheduledRar {
  AbsSf preamble_end = 0;
  AbsSf dci_start = 0;
  AbsSf pdsch_start = 0;
  int ce_level = 0;
  RarGrant grant;
};

struct EnbStats {
  std::size_t rars_scheduled = 0;
  std::size_t rars_dropped = 0;
  std::size_t contention_timeouts = 0;
  std::size_t initial_ue_messages = 0;
};

/// eNB MAC scheduler and RRC on the VNF side. Driven once per subframe:
///   on_indication(...) for each FAPI indication, on_s1(...) for each message
///   from the MME, then end_subframe() for the DL/UL configuration of `now`.
class Enb {
 public:
  Enb(const config::EnbConfig& cfg, Trace* trace);

  /// Queues S1SetupRequest.
  void start(AbsSf now);

  void on_indication(const fapi::FapiMessage& msg, AbsSf now);
  void on_s1(const s1ap::S1apMessage& msg, AbsSf now);
  /// Runs timers and pending work, then returns {DlConfigRequest, UlConfigRequest} for `now`.
  std::vector<fapi::FapiMessage> end_subframe(AbsSf now);
  /// S1AP messages produced since the last call, in send order.
  std::vector<s1ap::S1apMessage> take_s1_outbox();

  // Individually testable scheduler steps.
  std::optional<ScheduledRar> on_rach_indication(const fapi::RachIndication& ind, AbsSf now);
  /// Detections sharing an occasion and CE level get one RAR with an entry each.
  std::vector<ScheduledRar> on_rach_indications(const std::vector<fapi::RachIndication>& inds, AbsSf now);
  void on_msg3(std::uint16_t rnti, const Bytes& payload, AbsSf now);
  void on_harq(std::uint16_t rnti, bool ack, AbsSf now);
  /// Places DCI + NPDSCH (+ HARQ-ACK slot) for a connected UE. nullopt means
  /// the timeline is full beyond the scheduling horizon (backpressure).
  std::optional<phy::TransportBlock> schedule_dl(std::uint16_t rnti, const Bytes& payload, int ce_level, AbsSf now);

  bool s1_ready() const noexcept { return s1_ready_; }
  bool is_connected(std::uint16_t rnti) const;
  bool has_context(std::uint16_t rnti) const { return ues_.count(rnti) != 0; }
  const Timeline& dl_timeline() const noexcept { return dl_; }
  const Timeline& ul_timeline() const noexcept { return ul_; }
  const EnbStats& stats() const noexcept { return stats_; }
  /// Test hook: mark an existing or new rnti as connected at `ce_level`.
  void force_connected(std::uint16_t rnti, int ce_level);

 private:
  enum class UeState { wait_msg3, contention, connected };

  struct DlHarq {
    bool active = false;
    bool needs_tx = false;
    fapi::PduKind kind = fapi::PduKind::data;
    Bytes mac_pdu;
    int retx = 0;
    bool awaiting_ack = false;
  };
  struct UlHarq {
    bool active = false;
    int tbs = 0;
    int retx = 0;
  };
  struct PendingDl {
    fapi::PduKind kind;
    Bytes mac_pdu;
  };
  struct UeCtx {
    std::uint16_t rnti = 0;
    int ce = 0;
    UeState state = UeState::wait_msg3;
    AbsSf contention_deadline = 0;
    air::ContentionId contention_id{};
    DlHarq dl;
    UlHarq ul;
    std::deque<PendingDl> dl_queue;
    std::optional<std::uint32_t> enb_ue_id;
    std::optional<std::uint32_t> mme_ue_id;
    bool multitone = false;
    int buffer_bytes = 0;
    std::optional<AbsSf> poll_at;
    std::optional<int> regrant;  // UL grant waiting for room (tbs)
    bool regrant_new_data = true;
  };
  struct DciItem {
    fapi::Dci dci;
    const char* rnti_type;
  };
  struct DlPlacement {
    AbsSf dci_start = 0;
    int dci_len = 1;
    AbsSf pdsch_start = 0;
    int pdsch_len = 1;
    int repetitions = 1;
    AbsSf ack_start = 0;
    int ack_len = 0;
  };

  int ce_from_subcarrier(int subcarrier, int hint) const;
  std::vector<ScheduledRar> schedule_rar(AbsSf end, int ce, const std::vector<fapi::RachIndication>& members, AbsSf now);
  int dci_length(int ce) const;
  int ul_duration(const UeCtx& ue, int tbs, bool msg3) const;
  AbsSf horizon(AbsSf now) const { return now + static_cast<AbsSf>(cfg_->mac.schedule_horizon); }
  std::uint16_t allocate_temp_crnti();

  std::optional<DlPlacement> place_dl(bool css_only, int ce, std::size_t bytes, bool with_ack, AbsSf now) const;
  void commit_dl(const DlPlacement& p, std::uint16_t rnti, fapi::PduKind kind, const Bytes& pdu,
                 const char* rnti_type);
  bool transmit_dl(UeCtx& ue, AbsSf now);
  bool schedule_ul_grant(UeCtx& ue, int tbs, bool new_data, AbsSf now);

  void on_rx(std::uint16_t rnti, const Bytes& payload, AbsSf now);
  void on_crc(std::uint16_t rnti, bool pass, AbsSf now);
  void rrc_handle_ul(UeCtx& ue, const air::RrcMessage& msg, AbsSf now);
  void send_rrc_dl(UeCtx& ue, const air::RrcMessage& msg, AbsSf now);
  void send_s1(s1ap::S1apMessage msg, AbsSf now, std::uint32_t entity);
  void release(std::uint16_t rnti, AbsSf now, const std::string& why);
  void warn(AbsSf now, std::uint32_t entity, std::string text);

  const config::EnbConfig* cfg_;
  Trace* trace_;
  Timeline dl_;
  Timeline ul_;
  std::map<std::uint16_t, UeCtx> ues_;
  std::multimap<AbsSf, DciItem> dci_items_;
  std::multimap<AbsSf, fapi::DlPdu> pdu_items_;
  std::multimap<AbsSf, fapi::UlGrant> ul_items_;
  std::vector<s1ap::S1apMessage> s1_outbox_;
  std::vector<fapi::RachIndication> pending_rach_;
  std::uint16_t next_temp_crnti_ = 0x0101;
  std::uint32_t next_enb_ue_id_ = 1;
  bool s1_ready_ = false;
  EnbStats stats_;
};

}  // namespace nbsim::enb
