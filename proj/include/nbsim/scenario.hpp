#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nbsim/config.hpp"
#include "nbsim/enb.hpp"
#include "nbsim/mme.hpp"
#include "nbsim/phy.hpp"
#include "nbsim/trace.hpp"
#include "nbsim/ue.hpp"

// Scenario files, the deterministic event loop and run assertions.
//
//   [enb]          config = PATH, split = monolithic | loopback:PORT, run_length = N, seed = N,
//                  identity_request = true|false
//   [subscribers]  IMSI K_HEX [ce=N]
//   [ue ID]        imsi = IMSI, sim_k = K_HEX, band = N, then AT lines, optionally "@SF AT..."
//   [phy]          seed, loss, required_reps, crc_bug, crc_recovery, preamble_outcomes = miss,hit,...
//   [assert]       NAME = CHECK ARGS...
namespace nbsim::scenario {

struct SubscriberEntry {
  std::string imsi;
  nas::Key k{};
  int ce_level = 0;
};

struct AtLine {
  AbsSf not_before = 0;
  std::string command;
};

struct UeScript {
  std::uint32_t id = 0;
  std::string imsi;
  std::optional<nas::Key> sim_k;  // defaults to the subscriber's key
  int band = 28;
  std::vector<AtLine> script;
};

struct Assertion {
  std::string name;
  std::string check;
  std::vector<std::string> args;
  std::size_t line = 0;
};

struct Split {
  enum class Kind { monolithic, loopback };
  Kind kind = Kind::monolithic;
  std::uint16_t port = 0;
};

struct Scenario {
  std::string name;
  std::filesystem::path enb_config_path;
  config::EnbConfig enb;
  Split split;
  AbsSf run_length = 0;
  std::uint64_t seed = 1;
  bool identity_request = true;
  std::vector<SubscriberEntry> subscribers;
  std::vector<UeScript> ues;
  phy::DecodeModel phy;
  bool phy_seed_explicit = false;
  std::vector<Assertion> assertions;

  /// Replaces the run seed; the PHY seed follows unless [phy] pinned it.
  void reseed(std::uint64_t seed);
};

/// Parses scenario text; relative config paths resolve against `base_dir`.
/// Throws ConfigError with the scenario line on any problem, including errors
/// in the referenced eNB configuration.
Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& file);

struct AssertionResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct UeReport {
  std::uint32_t id = 0;
  std::string imsi;
  ue::Phase phase = ue::Phase::powered_on;
  std::optional<std::string> ip;
  ue::UeStats stats;
  std::vector<ue::AtExchange> transcript;
};

struct RunReport {
  std::vector<TraceEvent> trace;
  std::vector<core::UdpSinkRecord> sink;
  std::vector<AssertionResult> assertions;
  std::vector<UeReport> ues;
  enb::EnbStats enb;
  std::size_t preambles = 0;
  int exit_code = 0;
};

inline constexpr int kExitPass = 0;
inline constexpr int kExitAssertion = 1;
inline constexpr int kExitConfig = 2;

/// Runs the scenario for run_length subframes. Loopback splits fork a VNF
/// process and merge its trace and sink into the report.
RunReport run_scenario(const Scenario& s);

/// Evaluates the scenario's assertions against a finished run and sets exit_code.
void evaluate_assertions(const Scenario& s, RunReport& report);

/// S1AP message names in trace order.
std::vector<std::string> s1ap_projection(std::span<const TraceEvent> trace);

/// Pattern tokens are message names or the abbreviations Setup, SetupResp,
/// InitialUE, DL, UL. A token suffixed with `*` matches zero or more of that
/// type, `+` one or more; a bare `*` matches any run of messages.
AssertionResult assert_s1ap_sequence(std::span<const TraceEvent> trace, std::span<const std::string> pattern);

/// Monolithic event loop with everything in one process; also backs at-console.
class Simulation {
 public:
  explicit Simulation(const Scenario& s);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  void step();
  void run(AbsSf subframes);
  AbsSf now() const noexcept;

  ue::Ue& ue(std::uint32_t id);
  std::vector<std::uint32_t> ue_ids() const;
  const core::Mme& mme() const;
  const enb::Enb& enb() const;
  const phy::Radio& radio() const;

  /// Everything the run produced, with the trace sorted.
  RunReport report();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace nbsim::scenario
