#include <gtest/gtest.h>

#include "nbsim/scenario.hpp"

using namespace nbsim;
using namespace nbsim::scenario;

namespace {

const std::filesystem::path kScenarioDir = std::filesystem::path(NBSIM_SOURCE_DIR) / "scenarios";

// One BC95 UE on the reference cell; `script` replaces the AT lines.
std::string one_ue(const std::string& script, const std::string& extra = "", std::uint64_t run = 6000) {
  return "[enb]\nconfig = ../configs/enb_b28.conf\nrun_length = " + std::to_string(run) +
         "\nseed = 5\n[subscribers]\n001010000000001 000102030405060708090a0b0c0d0e0f\n"
         "[ue 1]\nimsi = 001010000000001\n" + script + extra;
}

const std::string kProvision =
    "AT+NRB\nAT+NCONFIG=CR_0354_0338_SCRAMBLING,FALSE\nAT+NEARFCN=0,9448\nAT+CGATT=1\n";

RunReport run_text(const std::string& text) { return run_scenario(parse_scenario(text, kScenarioDir)); }

}  // namespace

TEST(Ue, AttachesAndGetsAddress) {
  const auto r = run_text(one_ue(kProvision));
  ASSERT_EQ(r.ues.size(), 1u);
  EXPECT_EQ(r.ues[0].phase, ue::Phase::attached);
  EXPECT_EQ(r.ues[0].ip, "10.0.0.2");
  EXPECT_EQ(r.ues[0].stats.ce_at_success, 0);
  EXPECT_EQ(r.ues[0].stats.rach_failures, 0u);
}

TEST(Ue, WrongEarfcnNeverTransmits) {
  const auto r = run_text(one_ue("AT+NRB\nAT+NEARFCN=0,9450\nAT+CGATT=1\n"));
  EXPECT_EQ(r.ues[0].phase, ue::Phase::searching);
  EXPECT_EQ(r.ues[0].stats.preambles, 0u);
  EXPECT_EQ(r.preambles, 0u);
}

TEST(Ue, NoLockNoCamp) {
  const auto r = run_text(one_ue("AT+NRB\nAT+CGATT=1\n"));
  EXPECT_EQ(r.ues[0].phase, ue::Phase::searching);
  EXPECT_EQ(r.preambles, 0u);
}

TEST(Ue, ScramblingMismatchBlocksDownlink) {
  const auto r = run_text(one_ue("AT+NRB\nAT+NEARFCN=0,9448\nAT+CGATT=1\n"));
  EXPECT_NE(r.ues[0].phase, ue::Phase::attached);
  EXPECT_TRUE(r.sink.empty());
}

TEST(UeProperty, PreambleBudgetPerAttachAttempt) {
  // Every preamble lost: each attempt stops after the per-level budget.
  const auto cfg = parse_scenario(one_ue(kProvision), kScenarioDir).enb;
  std::size_t budget = 0;
  for (const auto& r : cfg.rach) budget += static_cast<std::size_t>(r.max_preamble_attempts);
  EXPECT_EQ(budget, 9u);
  for (std::uint64_t seed : {1, 2, 3}) {
    auto s = parse_scenario(one_ue(kProvision, "[phy]\nloss = 1\n", 20000), kScenarioDir);
    s.reseed(seed);
    const auto r = run_scenario(s);
    EXPECT_EQ(r.ues[0].stats.preambles, budget);
    EXPECT_EQ(r.ues[0].stats.rach_failures, 1u);
    EXPECT_EQ(r.ues[0].phase, ue::Phase::camped);
  }
}

TEST(Ue, RebootDropsAttach) {
  const auto r = run_text(one_ue(kProvision + "@5000 AT+NRB\n"));
  EXPECT_NE(r.ues[0].phase, ue::Phase::attached);
  EXPECT_FALSE(r.ues[0].ip);
}

TEST(Ue, AutoconnectAttachesWithoutCgatt) {
  const auto r = run_text(one_ue("AT+NRB\nAT+NCONFIG=AUTOCONNECT,TRUE\nAT+NCONFIG=CR_0354_0338_SCRAMBLING,FALSE\nAT+NEARFCN=0,9448\n"));
  EXPECT_EQ(r.ues[0].phase, ue::Phase::attached);
}

TEST(Ue, SimulationStepsAndExposesUe) {
  Simulation sim(parse_scenario(one_ue(kProvision), kScenarioDir));
  EXPECT_EQ(sim.ue_ids(), (std::vector<std::uint32_t>{1}));
  sim.run(3000);
  EXPECT_EQ(sim.now(), 3000u);
  EXPECT_EQ(sim.ue(1).state().phase, ue::Phase::attached);
  EXPECT_TRUE(sim.ue(1).crnti());
  EXPECT_EQ(sim.mme().attached_count(), 1u);
  EXPECT_THROW(sim.ue(2), Error);
}
