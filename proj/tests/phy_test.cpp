#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "nbsim/phy.hpp"

using namespace nbsim;
using namespace nbsim::phy;

namespace {

TransportBlock ul_block(std::size_t bytes, std::optional<std::size_t> bug_len = std::nullopt) {
  TransportBlock tb;
  tb.direction = Direction::ul;
  tb.payload = Bytes(bytes, 0x5a);
  tb.crc_bug_length = bug_len;
  return tb;
}

}  // namespace

TEST(PhyModel, ThresholdOnRepetitions) {
  DecodeModel m;
  m.required_reps = {1, 2, 4};
  PhyModel p(m);
  for (int ce = 0; ce < 3; ++ce) {
    const int need = m.required_reps[static_cast<std::size_t>(ce)];
    EXPECT_FALSE(p.detect_preamble({1, 0, ce, need - 1, 0, 0}) && need > 1);
    EXPECT_TRUE(p.detect_preamble({1, 0, ce, need, 0, 0}));
    auto tb = ul_block(3);
    tb.ce_level = ce;
    tb.repetitions = need;
    EXPECT_TRUE(p.deliver(tb).decoded());
    tb.repetitions = need - 1;
    EXPECT_FALSE(p.deliver(tb).decoded());
  }
}

TEST(PhyModel, LossProbabilityMatchesFrequency) {
  DecodeModel m;
  m.loss_prob = {0.3, 0.3, 0.3};
  m.rng_seed = 99;
  PhyModel p(m);
  int ok = 0;
  constexpr int kN = 20000;
  for (int i = 0; i < kN; ++i) ok += p.deliver(ul_block(2)).decoded() ? 1 : 0;
  // Binomial sd is about 65; allow 5 sd.
  EXPECT_NEAR(ok, 0.7 * kN, 330);
}

TEST(PhyModel, SameSeedSameOutcomes) {
  DecodeModel m;
  m.loss_prob = {0.5, 0.5, 0.5};
  m.rng_seed = 7;
  PhyModel a(m), b(m);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.deliver(ul_block(1)).decoded(), b.deliver(ul_block(1)).decoded());
}

TEST(PhyModel, CrcBugPredicate) {
  DecodeModel m;
  m.crc_bug_enabled = true;
  PhyModel p(m);
  EXPECT_TRUE(p.deliver(ul_block(4)).decoded());
  EXPECT_FALSE(p.deliver(ul_block(5)).decoded());
  // Only the declared user length counts.
  EXPECT_TRUE(p.deliver(ul_block(40, 4)).decoded());
  EXPECT_FALSE(p.deliver(ul_block(40, 11)).decoded());
  EXPECT_TRUE(p.deliver(ul_block(40, 0)).decoded());
  auto dl = ul_block(40);
  dl.direction = Direction::dl;
  EXPECT_TRUE(p.deliver(dl).decoded());
}

TEST(PhyModel, CrcRecoveryDecodesAffectedBlocks) {
  DecodeModel m;
  m.crc_bug_enabled = true;
  m.crc_recovery_enabled = true;
  PhyModel p(m);
  const auto d = p.deliver(ul_block(11, 11));
  ASSERT_TRUE(d.decoded());
  EXPECT_EQ(d.payload, Bytes(11, 0x5a));
}

TEST(PhyModel, ScramblingMismatchFails) {
  PhyModel p(DecodeModel{});
  EXPECT_FALSE(p.deliver(ul_block(1), false).decoded());
}

TEST(PhyModel, PreambleScriptConsumedFirst) {
  DecodeModel m;
  m.preamble_script = {false, false, true};
  PhyModel p(m);
  EXPECT_FALSE(p.detect_preamble({}));
  EXPECT_FALSE(p.detect_preamble({}));
  EXPECT_TRUE(p.detect_preamble({}));
  EXPECT_TRUE(p.detect_preamble({}));  // model applies afterwards
}

TEST(PhyModel, CollisionsYieldOneDetection) {
  PhyModel p(DecodeModel{});
  auto d = p.detect_occasion({{2, 5, 0, 1, 0, 100}, {1, 5, 0, 1, 0, 100}, {3, 6, 0, 1, 0, 100}});
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].subcarrier, 5);
  EXPECT_EQ(d[0].ue_ids, (std::vector<std::uint32_t>{1, 2}));
  EXPECT_EQ(d[0].end, 100u + static_cast<AbsSf>(preamble_duration_sf(1)) - 1);
  EXPECT_EQ(d[1].ue_ids, (std::vector<std::uint32_t>{3}));
}

TEST(DecodeModel, Validation) {
  DecodeModel m;
  EXPECT_NO_THROW(m.validate());
  m.loss_prob[1] = 1.5;
  EXPECT_THROW(m.validate(), ConfigError);
  m = DecodeModel{};
  m.required_reps = {2, 1, 4};
  EXPECT_THROW(m.validate(), ConfigError);
  m.required_reps = {0, 1, 4};
  EXPECT_THROW(m.validate(), ConfigError);
}

TEST(Radio, PreambleOutsideRegionIsRejected) {
  std::ifstream in(std::string(NBSIM_SOURCE_DIR) + "/configs/enb_b28.conf");
  std::stringstream s;
  s << in.rdbuf();
  const auto cfg = config::load_enb_config(s.str());
  Radio r(cfg, DecodeModel{}, nullptr);
  const auto& res = cfg.rach[0].nprach;
  EXPECT_THROW(r.transmit_preamble({1, res.subcarrier_offset + res.num_subcarriers, 0, 1, 0, 0}), Error);
  EXPECT_NO_THROW(r.transmit_preamble({1, res.subcarrier_offset, 0, 1, 0, 0}));
  EXPECT_EQ(r.preambles_transmitted(), 1u);
}

TEST(Radio, PreambleProducesRachIndicationAtEnd) {
  std::ifstream in(std::string(NBSIM_SOURCE_DIR) + "/configs/enb_b28.conf");
  std::stringstream s;
  s << in.rdbuf();
  const auto cfg = config::load_enb_config(s.str());
  Radio r(cfg, DecodeModel{}, nullptr);
  const AbsSf start = 10248;
  const int dur = preamble_duration_sf(cfg.rach[0].repetitions_per_attempt);
  r.transmit_preamble({1, cfg.rach[0].nprach.subcarrier_offset, 0, cfg.rach[0].repetitions_per_attempt, 0, start});
  for (AbsSf t = start; t < start + static_cast<AbsSf>(dur); ++t) {
    for (const auto& m : r.uplink_indications(t)) EXPECT_FALSE(std::holds_alternative<fapi::RachIndication>(m));
  }
  const auto out = r.uplink_indications(start + static_cast<AbsSf>(dur));
  ASSERT_FALSE(out.empty());
  const auto* ind = std::get_if<fapi::RachIndication>(&out.front());
  ASSERT_NE(ind, nullptr);
  const AbsSf end = start + static_cast<AbsSf>(dur) - 1;
  EXPECT_EQ(ind->sfn, (end / 10) % 1024);
  EXPECT_EQ(ind->sf, end % 10);
  EXPECT_TRUE(std::holds_alternative<fapi::SubframeIndication>(out.back()));
}
