#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "nbsim/air.hpp"
#include "nbsim/config.hpp"
#include "nbsim/nas.hpp"
#include "nbsim/phy.hpp"
#include "nbsim/trace.hpp"

namespace nbsim::ue {

enum class Phase { powered_on, searching, camped, rach, rrc_connected, attached };
std::string_view to_string(Phase p);

struct EarfcnLock {
  int mode = 0;
  int earfcn = 0;
  bool operator==(const EarfcnLock&) const = default;
};

/// Non-volatile modem settings; they survive AT+NRB.
struct UeNvConfig {
  bool autoconnect = false;
  bool scrambling = true;
  bool si_avoid = true;
  bool pco_ie_epco = false;
  int release_version = 13;
  bool multitone = false;
  std::vector<std::string> pdp_contexts;
  std::map<std::string, std::string> other;  // unrecognised keys, stored verbatim

  bool operator==(const UeNvConfig&) const = default;
};

inline constexpr int kMaxSockets = 7;

struct Socket {
  int id = 0;
  int proto = 17;
  std::uint16_t local_port = 0;
  bool listen = false;
};

struct Datagram {
  int socket = 0;
  std::string dest_ip;
  std::uint16_t dest_port = 0;
  Bytes payload;
};

struct UeState {
  Phase phase = Phase::powered_on;
  std::optional<EarfcnLock> earfcn_lock;
  UeNvConfig nv;
  std::map<int, Socket> sockets;
  std::string imsi;
  nas::Key k{};
  std::optional<std::string> assigned_ip;
  bool attach_requested = false;
  /// Set by AT+NRB / AT+CGATT=0; the UE model consumes them.
  bool reboot_pending = false;
  bool detach_pending = false;
  std::deque<Datagram> outbox;
};

/// Executes one AT command line and returns the response lines. Volatile state
/// (phase, sockets, attach, EARFCN lock, queued datagrams) is reset by AT+NRB.
std::vector<std::string> execute_at(std::string_view line, UeState& state);

struct AtExchange {
  AbsSf abs_sf = 0;
  std::string command;
  std::vector<std::string> responses;
};

struct UeParams {
  std::uint32_t id = 0;
  std::string imsi;
  nas::Key k{};
  int declared_ce = 0;
  int band = 28;
  std::uint64_t seed = 1;
  AbsSf boot_delay = 100;     // power-on to cell search
  AbsSf sync_delay = 200;     // NPSS/NSSS + MIB-NB + SIB1/2-NB acquisition
  AbsSf attach_guard = 15000; // T3410-like
  AbsSf sr_delay = 40;        // idle time before random access for uplink data
};

struct UeStats {
  std::size_t preambles = 0;
  std::size_t rach_failures = 0;
  std::optional<int> ce_at_success;  // CE level of the last successful random access
  std::size_t attach_rejects = 0;
  std::size_t guard_expiries = 0;
};

class Ue {
 public:
  Ue(UeParams params, const config::EnbConfig& cell, phy::Radio& radio, Trace* trace);

  /// Queues a command for execution no earlier than `not_before`.
  void queue_at(AbsSf not_before, std::string line);
  bool at_queue_empty() const noexcept { return at_queue_.empty(); }

  /// Runs after the radio produced this subframe's DL completions.
  void step(AbsSf now);

  std::uint32_t id() const noexcept { return params_.id; }
  const UeState& state() const noexcept { return state_; }
  const std::vector<AtExchange>& transcript() const noexcept { return transcript_; }
  const UeStats& stats() const noexcept { return stats_; }
  std::optional<std::uint16_t> crnti() const noexcept { return crnti_; }

 private:
  enum class RachPurpose { attach, scheduling_request };
  enum class RachStep { wait_occasion, wait_rar, wait_msg4 };
  struct RachProc {
    RachPurpose purpose = RachPurpose::attach;
    RachStep step = RachStep::wait_occasion;
    int ce = 0;
    int attempt = 0;  // preambles sent at this CE level
    AbsSf occasion = 0;
    int subcarrier = 0;
    AbsSf window_last = 0;  // last subframe a RAR NPDCCH may start
    std::uint16_t ra_rnti = 0;
    std::optional<AbsSf> rar_pdsch_end;
    std::uint16_t temp_crnti = 0;
    AbsSf cr_deadline = 0;
    air::ContentionId contention_id{};
    Bytes msg3;
    int msg3_reps = 1;
    int msg3_duration = 1;
  };
  struct PdschExpect {
    std::uint16_t rnti = 0;
    AbsSf start = 0;
    int ack_delay = 0;
  };
  struct UlSdu {
    Bytes rrc;
    std::size_t user_bytes = 0;
  };

  void trace(AbsSf now, TraceTag tag, std::string detail) const;
  void process_at(AbsSf now);
  void reset_volatile(AbsSf now);
  void go_idle(AbsSf now, const std::string& why);
  void drive_phase(AbsSf now);

  void start_rach(RachPurpose purpose, AbsSf now);
  void schedule_occasion(AbsSf now);
  void send_preamble(AbsSf now);
  void rach_attempt_failed(AbsSf now, const std::string& why);
  void rach_succeeded(AbsSf now);
  void check_rach_timeouts(AbsSf now);

  void handle_dl(const phy::DlTransmission& tx, AbsSf now);
  void on_dci(const phy::DlTransmission& tx, AbsSf now);
  void on_pdsch(const phy::DlTransmission& tx, const phy::Delivery& d, AbsSf now);
  void on_rar(const Bytes& payload, const phy::DlTransmission& tx, AbsSf now);
  void on_msg4(const Bytes& payload, AbsSf now, bool& ack);
  void on_rrc_dl(const air::RrcMessage& msg, AbsSf now);
  void on_nas(const nas::NasPdu& pdu, AbsSf now);
  void on_ul_grant(const fapi::Dci& dci, AbsSf start, AbsSf now);
  void send_ack(std::uint16_t rnti, AbsSf start, bool ack, AbsSf now);

  void send_nas(const nas::NasPdu& pdu, AbsSf now, std::size_t user_bytes = 0);
  void queue_ul_rrc(const air::RrcMessage& msg, std::size_t user_bytes);
  std::size_t buffered_bytes() const;
  bool monitors(std::uint16_t rnti) const;
  int current_ce() const;

  UeParams params_;
  const config::EnbConfig* cell_;
  phy::Radio* radio_;
  Trace* trace_;
  std::mt19937_64 rng_;

  UeState state_;
  std::deque<std::pair<AbsSf, std::string>> at_queue_;
  std::vector<AtExchange> transcript_;
  UeStats stats_;

  AbsSf boot_done_at_ = 0;
  std::optional<AbsSf> sync_since_;
  bool auto_attach_suppressed_ = false;
  std::optional<AbsSf> attach_started_;
  std::optional<RachProc> rach_;
  std::optional<std::uint16_t> crnti_;
  int connected_ce_ = 0;
  std::vector<PdschExpect> pdsch_expect_;
  std::vector<phy::UlTransmission> pending_tx_;
  std::deque<UlSdu> ul_buffer_;
  std::optional<phy::UlTransmission> last_tb_;
  AbsSf last_ul_activity_ = 0;
};

}  // namespace nbsim::ue
