#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nbsim/error.hpp"

namespace nbsim::config {

// ---------------------------------------------------------------------------
// Generic configuration tree (libconfig-like subset)
// ---------------------------------------------------------------------------

struct ConfigNode;
struct ConfigEntry;

/// Ordered `name = value` settings; names are unique within one group.
struct ConfigGroup {
  std::vector<ConfigEntry> entries;

  const ConfigNode* find(std::string_view name) const;
  bool operator==(const ConfigGroup& other) const;
};

using ConfigList = std::vector<ConfigGroup>;

struct ConfigNode {
  std::variant<std::int64_t, std::string, ConfigGroup, ConfigList> value;

  bool operator==(const ConfigNode& other) const { return value == other.value; }
};

struct ConfigEntry {
  std::string name;
  ConfigNode node;

  bool operator==(const ConfigEntry& other) const = default;
};

using ConfigTree = ConfigGroup;

/// Parses the eNB configuration grammar:
///   setting  := name ('=' | ':') value [';' | ',']
///   value    := integer ['L'] | "string" | '{' setting* '}' | '(' [group {',' group}] ')'
/// Comments are `#...`, `//...` and `/* ... */`. A bare `...` (as in abridged
/// listings) is skipped wherever a setting may start.
/// Throws ConfigError carrying line/column on syntax errors and duplicate keys.
ConfigTree parse_config(std::string_view text);

/// Canonical text form; parse_config(serialize_config(t)) == t.
std::string serialize_config(const ConfigTree& tree);

// ---------------------------------------------------------------------------
// Typed eNB configuration
// ---------------------------------------------------------------------------

enum class OperationMode { standalone, inband, guardband };
enum class SubcarrierSpacing { khz15, khz3_75 };
enum class Msg3RangeStart { zero, one_third, two_third, one };
enum class CssOffset { zero, one_eighth, one_fourth, three_eighth };

std::string_view to_string(OperationMode m);
std::string_view to_string(SubcarrierSpacing s);
std::string_view to_string(Msg3RangeStart r);
std::string_view to_string(CssOffset o);

inline constexpr int kNumCeLevels = 3;
inline constexpr int kNprachSubcarriers = 48;

struct CellConfig {
  static constexpr std::int64_t kCarrierBandwidthHz = 180'000;

  int eutra_band = 0;
  std::int64_t downlink_frequency_hz = 0;
  std::int64_t uplink_frequency_offset_hz = 0;
  OperationMode operation_mode = OperationMode::standalone;
  SubcarrierSpacing subcarrier_spacing = SubcarrierSpacing::khz15;
  bool scrambling = false;

  std::int64_t uplink_frequency_hz() const { return downlink_frequency_hz + uplink_frequency_offset_hz; }
};

/// NPRACH time/frequency resource of one CE level.
struct NprachResource {
  int periodicity_ms = 80;
  int start_time_ms = 8;
  int subcarrier_offset = 0;
  int num_subcarriers = 12;
};

struct RachCeConfig {
  int response_window = 8;               // NPDCCH periods
  int contention_resolution_timer = 32;  // NPDCCH periods
  int preamble_initial_target_power_dbm = -90;
  Msg3RangeStart msg3_range_start = Msg3RangeStart::zero;
  int max_preamble_attempts = 3;
  int repetitions_per_attempt = 1;
  NprachResource nprach;
  int npdsch_repetitions = 1;
  int npusch_repetitions = 1;

  /// First subcarrier (within the level's NPRACH region) usable for Msg3.
  int msg3_first_subcarrier() const;
  /// Preamble duration in whole subframes (5.6 ms per repetition, rounded up).
  int preamble_duration_sf() const;
};

/// Type-2 common search space for RA messages.
struct NpdcchCssConfig {
  int r_max = 4;
  int start_sf_g_halves = 4;  // G expressed in halves so G = 1.5 stays exact
  CssOffset offset = CssOffset::zero;

  /// Period T = r_max * G in subframes; throws ConfigError when not an integer.
  int period() const;
  /// floor(offset_fraction * T).
  int offset_sf() const;
};

struct NetworkConfig {
  std::string mme_ipv4;
  std::string enb_s1_mme_ipv4_cidr;
  std::string enb_s1u_ipv4_cidr;
  int s1u_port = 2152;

  /// Address part of the S1-MME CIDR.
  std::string enb_ipv4() const;
};

/// Scheduler numerology the reference configuration leaves open.
struct MacConfig {
  int dci_to_data_gap = 4;
  int max_harq_retx = 3;
  int msg3_delay = 12;
  int ul_grant_delay = 8;
  int harq_ack_delay = 12;
  int harq_ack_duration = 2;
  int dl_bytes_per_subframe = 20;
  int ul_bytes_per_ru = 16;
  int ul_poll_bytes = 32;
  int ul_poll_delay = 16;
  int schedule_horizon = 2048;
  int rar_min_delay = 4;      // preamble end -> earliest RAR NPDCCH start
  int max_tbs_bytes = 1600;   // no RLC segmentation: one SDU must fit one TB
  int msg3_tbs_bytes = 16;
};

struct EnbConfig {
  std::uint32_t enb_id = 0xe00;
  std::string enb_name = "nbiot-enb";
  std::string plmn = "00101";
  CellConfig cell;
  std::array<RachCeConfig, kNumCeLevels> rach;
  NpdcchCssConfig css;
  NetworkConfig network;
  MacConfig mac;
};

/// Maps a parsed tree onto EnbConfig. Looks for settings under the first
/// `eNBs` group when present, otherwise at the root; cell and RACH keys live in
/// the first `component_carriers` group.
EnbConfig extract_enb_config(const ConfigTree& tree);

/// parse_config + extract_enb_config.
EnbConfig load_enb_config(std::string_view text);

// ---------------------------------------------------------------------------
// EARFCN <-> carrier frequency
// ---------------------------------------------------------------------------

struct Carrier {
  std::int64_t dl_hz = 0;
  std::int64_t ul_hz = 0;

  bool operator==(const Carrier&) const = default;
};

enum class EarfcnMapping {
  /// Band table plus explicit field-observed overrides ((28, 9448) -> 780 MHz).
  field_observed,
  /// F_DL = F_DL_low + 0.1 MHz * (N - N_offs) only.
  standard,
};

/// Standard UL - DL spacing of a band; throws ConfigError for an unknown band.
std::int64_t band_duplex_offset_hz(int band);

/// Uplink is dl + uplink_offset_hz, defaulting to the band's duplex spacing.
/// Throws ConfigError for an unknown band or an EARFCN outside the band.
Carrier earfcn_to_carrier(int band, int earfcn, EarfcnMapping mapping = EarfcnMapping::field_observed,
                          std::optional<std::int64_t> uplink_offset_hz = std::nullopt);

}  // namespace nbsim::config
