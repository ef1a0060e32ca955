#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nbsim/clock.hpp"
#include "nbsim/nas.hpp"
#include "nbsim/s1ap.hpp"
#include "nbsim/trace.hpp"

// Mock control-plane core: S1 setup, the EMM attach dialogue and delivery of
// NAS-carried user datagrams into a recorded sink. There is no user plane.
namespace nbsim::core {

class SubscriberTable {
 public:
  /// Throws ConfigError on a malformed or duplicate IMSI.
  void add(const std::string& imsi, const nas::Key& k);
  const nas::Key* find(const std::string& imsi) const;
  std::size_t size() const noexcept { return keys_.size(); }

 private:
  std::map<std::string, nas::Key, std::less<>> keys_;
};

/// Sequential allocation from 10.0.0.2 within 10.0.0.0/24.
class IpPool {
 public:
  static constexpr std::uint32_t kBase = 0x0a000000;  // 10.0.0.0
  static constexpr std::uint32_t kFirstHost = 2;
  static constexpr std::uint32_t kLastHost = 254;

  /// Throws Error("IP pool exhausted") once all 253 addresses are out.
  std::string allocate();
  std::size_t allocated() const noexcept { return next_ - kFirstHost; }

 private:
  std::uint32_t next_ = kFirstHost;
};

struct UdpSinkRecord {
  std::string dest_ip;
  std::uint16_t dest_port = 0;
  Bytes payload;
  AbsSf abs_sf = 0;

  bool operator==(const UdpSinkRecord&) const = default;
};

/// `abs_sf dest_ip:dest_port hex(payload)`
std::string format_sink_record(const UdpSinkRecord& r);

struct MmeOptions {
  std::string name = "nbsim-mme";
  /// Ask for the IMSI again after the Attach Request (one extra NAS round trip).
  bool identity_request = true;
  std::uint64_t rand_seed = 1;
};

class Mme {
 public:
  Mme(MmeOptions options, SubscriberTable subscribers, Trace* trace);

  /// Processes one inbound S1AP message and returns the replies, in send order.
  std::vector<s1ap::S1apMessage> handle_s1(const s1ap::S1apMessage& msg, AbsSf now);

  const std::vector<UdpSinkRecord>& sink() const noexcept { return sink_; }
  bool s1_established() const noexcept { return s1_established_; }
  std::size_t attached_count() const;

 private:
  enum class State { wait_identity, wait_auth, wait_smc, wait_complete, attached };
  struct UeContext {
    s1ap::UeIds ids;
    State state = State::wait_identity;
    std::string imsi;
    nas::Res xres{};
    std::string ip;
  };

  void on_nas(UeContext& ue, const Bytes& nas_bytes, AbsSf now, std::vector<s1ap::S1apMessage>& out);
  void send_nas(UeContext& ue, const nas::NasPdu& pdu, AbsSf now, std::vector<s1ap::S1apMessage>& out);
  void start_auth(UeContext& ue, AbsSf now, std::vector<s1ap::S1apMessage>& out);
  void reject(UeContext& ue, AbsSf now, std::vector<s1ap::S1apMessage>& out, const std::string& why);
  void emit_sent(const s1ap::S1apMessage& msg, AbsSf now, std::uint32_t entity);

  MmeOptions options_;
  SubscriberTable subscribers_;
  Trace* trace_;
  IpPool pool_;
  std::mt19937_64 rng_;
  bool s1_established_ = false;
  std::uint32_t next_mme_ue_id_ = 1;
  std::map<std::uint32_t, UeContext> ues_;  // by mme_ue_id
  std::vector<UdpSinkRecord> sink_;
};

}  // namespace nbsim::core
