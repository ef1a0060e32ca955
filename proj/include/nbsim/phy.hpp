#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "nbsim/bytes.hpp"
#include "nbsim/clock.hpp"
#include "nbsim/config.hpp"
#include "nbsim/fapi.hpp"
#include "nbsim/trace.hpp"

namespace nbsim::phy {

enum class Direction { dl, ul };

struct TransportBlock {
  Direction direction = Direction::dl;
  std::uint16_t rnti = 0;
  Bytes payload;
  int repetitions = 1;
  int ce_level = 0;
  AbsSf start = 0;
  /// Length the CRC-bug predicate looks at. Unset means the whole payload;
  /// the UE sets it to the user datagram size (0 for pure signalling).
  std::optional<std::size_t> crc_bug_length;
};

/// Threshold-plus-Bernoulli channel: a block decodes iff it carries at least
/// required_reps[ce] repetitions and one uniform draw is >= loss_prob[ce].
struct DecodeModel {
  std::array<int, config::kNumCeLevels> required_reps{1, 2, 4};
  std::uint64_t rng_seed = 1;
  std::array<double, config::kNumCeLevels> loss_prob{0.0, 0.0, 0.0};
  bool crc_bug_enabled = false;
  bool crc_recovery_enabled = false;
  /// Scripted preamble outcomes consumed in order before the model applies.
  std::vector<bool> preamble_script;

  /// Throws ConfigError when a probability is outside [0,1] or required_reps
  /// is not positive and non-decreasing.
  void validate() const;
};

inline constexpr std::size_t kCrcBugThreshold = 4;

struct PreambleTx {
  std::uint32_t ue_id = 0;
  int subcarrier = 0;
  int ce_level = 0;
  int repetitions = 1;
  int tx_power_dbm = 0;
  AbsSf start = 0;
};

/// Preamble length in subframes: 5.6 ms per repetition, rounded up.
constexpr int preamble_duration_sf(int repetitions) { return (repetitions * 28 + 4) / 5; }

/// One detected preamble (possibly several colliding UEs).
struct Detection {
  AbsSf start = 0;
  AbsSf end = 0;
  int subcarrier = 0;
  int ce_level = 0;
  std::vector<std::uint32_t> ue_ids;
};

enum class Outcome { decoded, crc_fail };

struct Delivery {
  Outcome outcome = Outcome::crc_fail;
  Bytes payload;
  bool decoded() const noexcept { return outcome == Outcome::decoded; }
};

class PhyModel {
 public:
  explicit PhyModel(DecodeModel model);

  /// One draw per call (or one script entry while the script lasts).
  bool detect_preamble(const PreambleTx& tx);

  /// Preambles sharing a subcarrier in one occasion collide and yield at most
  /// one detection, present when any of them is detected. Results are ordered
  /// by (start, subcarrier); members are evaluated in ue_id order.
  std::vector<Detection> detect_occasion(std::vector<PreambleTx> txs);

  /// Exactly one draw per call, so the random stream does not depend on outcomes.
  Delivery deliver(const TransportBlock& tb, bool scrambling_match = true);

  const DecodeModel& model() const noexcept { return model_; }

 private:
  double draw();

  DecodeModel model_;
  std::mt19937_64 rng_;
  std::size_t script_pos_ = 0;
};

// ---------------------------------------------------------------------------
// Radio: the PNF side of the split. Collects UE transmissions, applies DL/UL
// configuration requests and produces the uplink indications.
// ---------------------------------------------------------------------------

struct UlTransmission {
  std::uint32_t ue_id = 0;
  std::uint16_t rnti = 0;
  fapi::UlKind kind = fapi::UlKind::npusch;
  AbsSf start = 0;
  int duration = 1;
  int repetitions = 1;
  int ce_level = 0;
  Bytes payload;  // npusch only
  std::optional<std::size_t> crc_bug_length;
  bool ack = false;  // harq_ack only
};

struct DlTransmission {
  enum class Kind { dci, pdsch };
  Kind kind = Kind::dci;
  AbsSf start = 0;
  AbsSf end = 0;  // last subframe, inclusive
  fapi::Dci dci;
  fapi::DlPdu pdu;

  std::uint16_t rnti() const noexcept { return kind == Kind::dci ? dci.rnti : pdu.rnti; }
};

class Radio {
 public:
  Radio(const config::EnbConfig& cfg, DecodeModel model, Trace* trace);

  /// Completes everything that ended at now-1 and returns the indications for
  /// the VNF, terminated by SubframeIndication(now). Also refreshes the list
  /// returned by completed_dl().
  std::vector<fapi::FapiMessage> uplink_indications(AbsSf now);

  /// DL/UL configuration for subframe `now`; other message types are ignored.
  void apply(const fapi::FapiMessage& msg, AbsSf now);

  void transmit_preamble(const PreambleTx& tx);
  void transmit_ul(UlTransmission tx);

  /// DL transmissions whose last subframe was now-1, in start order.
  const std::vector<DlTransmission>& completed_dl() const noexcept { return completed_dl_; }

  /// Decode attempt of one UE; consumes one draw.
  Delivery decode_dl(const DlTransmission& tx, int ce_level, bool ue_scrambling);

  PhyModel& model() noexcept { return phy_; }
  std::size_t preambles_transmitted() const noexcept { return preambles_total_; }

 private:
  struct Expected {
    fapi::UlGrant grant;
    AbsSf start = 0;
    AbsSf end = 0;
  };

  const config::EnbConfig* cfg_;
  PhyModel phy_;
  Tracer trace_;
  std::vector<PreambleTx> preambles_;
  std::vector<UlTransmission> ul_;
  std::vector<Expected> expected_;
  std::vector<DlTransmission> dl_;
  std::vector<DlTransmission> completed_dl_;
  std::size_t preambles_total_ = 0;
};

}  // namespace nbsim::phy
