#include <gtest/gtest.h>

#include <filesystem>

#include "nbsim/scenario.hpp"

using namespace nbsim;
using namespace nbsim::scenario;

namespace {

const std::filesystem::path kDir = std::filesystem::path(NBSIM_SOURCE_DIR) / "scenarios";

const std::string kHead =
    "[enb]\nconfig = ../configs/enb_b28.conf\nrun_length = 100\n"
    "[subscribers]\n001010000000001 000102030405060708090a0b0c0d0e0f\n";

std::size_t error_line(const std::string& text) {
  try {
    parse_scenario(text, kDir);
  } catch (const ConfigError& e) {
    return e.line();
  }
  ADD_FAILURE() << "no ConfigError for:\n" << text;
  return 0;
}

std::vector<TraceEvent> s1_trace(std::initializer_list<const char*> names) {
  std::vector<TraceEvent> out;
  AbsSf t = 0;
  for (const char* n : names) out.push_back({t++, TraceTag::s1ap, Component::mme, 0, std::string(n) + " x=1"});
  return out;
}

bool matches(const std::vector<TraceEvent>& trace, std::vector<std::string> pattern) {
  return assert_s1ap_sequence(trace, pattern).pass;
}

}  // namespace

TEST(ScenarioParse, MinimalAndDefaults) {
  const auto s = parse_scenario(kHead, kDir);
  EXPECT_EQ(s.run_length, 100u);
  EXPECT_EQ(s.seed, 1u);
  EXPECT_TRUE(s.identity_request);
  EXPECT_EQ(s.split.kind, Split::Kind::monolithic);
  EXPECT_EQ(s.phy.rng_seed, 1u);
  ASSERT_EQ(s.subscribers.size(), 1u);
  EXPECT_EQ(s.subscribers[0].k[15], 0x0f);
}

TEST(ScenarioParse, UeScriptAndTimedLines) {
  const auto s = parse_scenario(kHead + "[ue 4]\nimsi = 001010000000001\nband = 8\nAT+NRB\n@500 AT+CGATT=1\n", kDir);
  ASSERT_EQ(s.ues.size(), 1u);
  EXPECT_EQ(s.ues[0].id, 4u);
  EXPECT_EQ(s.ues[0].band, 8);
  ASSERT_EQ(s.ues[0].script.size(), 2u);
  EXPECT_EQ(s.ues[0].script[0].not_before, 0u);
  EXPECT_EQ(s.ues[0].script[1].not_before, 500u);
  EXPECT_EQ(s.ues[0].script[1].command, "AT+CGATT=1");
}

TEST(ScenarioParse, PhySection) {
  const auto s = parse_scenario(
      kHead + "[phy]\nloss = 0.1, 0.2, 0.3\nrequired_reps = 1,1,1\ncrc_bug = true\npreamble_outcomes = miss,hit\n", kDir);
  EXPECT_DOUBLE_EQ(s.phy.loss_prob[2], 0.3);
  EXPECT_EQ(s.phy.required_reps[1], 1);
  EXPECT_TRUE(s.phy.crc_bug_enabled);
  EXPECT_FALSE(s.phy.crc_recovery_enabled);
  EXPECT_EQ(s.phy.preamble_script, (std::vector<bool>{false, true}));
}

TEST(ScenarioParse, ReseedFollowsUnlessPinned) {
  auto s = parse_scenario(kHead, kDir);
  s.reseed(9);
  EXPECT_EQ(s.seed, 9u);
  EXPECT_EQ(s.phy.rng_seed, 9u);
  auto p = parse_scenario(kHead + "[phy]\nseed = 4\n", kDir);
  p.reseed(9);
  EXPECT_EQ(p.phy.rng_seed, 4u);
}

TEST(ScenarioParse, SplitSetting) {
  auto s = parse_scenario(kHead + "[enb]\nsplit = loopback:47000\n", kDir);
  EXPECT_EQ(s.split.kind, Split::Kind::loopback);
  EXPECT_EQ(s.split.port, 47000);
}

TEST(ScenarioParse, ErrorsNameTheLine) {
  EXPECT_EQ(error_line(kHead + "[ue 1]\nimsi = 001010000000002\n"), 6u);       // no subscriber
  EXPECT_EQ(error_line(kHead + "[bogus]\n"), 6u);
  EXPECT_EQ(error_line(kHead + "[enb]\nsplit = tcp\n"), 7u);
  EXPECT_EQ(error_line(kHead + "[phy]\nloss = 2\n"), 7u);
  EXPECT_EQ(error_line(kHead + "[phy]\npreamble_outcomes = maybe\n"), 7u);
  EXPECT_EQ(error_line(kHead + "[assert]\nx = frobnicate 1\n"), 7u);
  EXPECT_EQ(error_line(kHead + "[assert]\nx = sink_count 1\nx = sink_count 2\n"), 8u);
  EXPECT_EQ(error_line(kHead + "[subscribers]\n001010000000001 00\n"), 7u);
  EXPECT_EQ(error_line(kHead + "[ue 1]\nimsi = 001010000000001\n[ue 1]\n"), 8u);
  EXPECT_EQ(error_line("key = 1\n"), 1u);
}

TEST(ScenarioParse, MissingRequiredSettings) {
  EXPECT_THROW(parse_scenario("[enb]\nrun_length = 5\n", kDir), ConfigError);
  EXPECT_THROW(parse_scenario("[enb]\nconfig = ../configs/enb_b28.conf\n", kDir), ConfigError);
  EXPECT_THROW(parse_scenario("[enb]\nconfig = nowhere.conf\nrun_length = 5\n", kDir), ConfigError);
}

TEST(ScenarioParse, BadEnbConfigNamesTheFile) {
  try {
    parse_scenario("[enb]\nconfig = ../tests/data/bad.conf\nrun_length = 5\n", kDir);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.conf"), std::string::npos);
  }
}

TEST(S1apPattern, Tokens) {
  const auto t = s1_trace({"S1SetupRequest", "S1SetupResponse", "InitialUEMessage", "DownlinkNASTransport",
                           "UplinkNASTransport", "DownlinkNASTransport", "UplinkNASTransport"});
  EXPECT_TRUE(matches(t, {"Setup", "SetupResp", "InitialUE", "DL", "UL", "DL", "UL"}));
  EXPECT_TRUE(matches(t, {"Setup", "SetupResp", "InitialUE", "*"}));
  EXPECT_TRUE(matches(t, {"*"}));
  EXPECT_TRUE(matches(t, {"Setup", "SetupResp", "InitialUE", "DL+", "UL", "*"}));
  EXPECT_TRUE(matches(t, {"Setup", "SetupResp", "Setup*", "InitialUE", "*", "UL"}));
  EXPECT_TRUE(matches(t, {"S1SetupRequest", "*", "UplinkNASTransport"}));
  EXPECT_FALSE(matches(t, {"Setup", "SetupResp", "InitialUE", "UL", "*"}));
  EXPECT_FALSE(matches(t, {"Setup", "SetupResp", "InitialUE", "DL", "UL"}));
  EXPECT_FALSE(matches(t, {"Setup", "SetupResp", "InitialUE", "DL", "UL", "DL", "UL", "DL"}));
}

TEST(S1apPattern, EmptyPatternMatchesOnlyEmptySequence) {
  EXPECT_TRUE(matches({}, {}));
  EXPECT_FALSE(matches(s1_trace({"S1SetupRequest"}), {}));
  EXPECT_TRUE(matches({}, {"*"}));
  EXPECT_FALSE(matches({}, {"DL+"}));
}

TEST(S1apPattern, FailureDetailPointsAtMismatch) {
  const auto t = s1_trace({"S1SetupRequest", "S1SetupResponse", "InitialUEMessage"});
  const std::vector<std::string> p{"Setup", "SetupResp", "DL"};
  const auto r = assert_s1ap_sequence(t, p);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.detail, "mismatch at position 2 (got InitialUEMessage)");
  const std::vector<std::string> longer{"Setup", "SetupResp", "InitialUE", "DL"};
  EXPECT_EQ(assert_s1ap_sequence(t, longer).detail, "sequence ended after 3 messages");
}

TEST(S1apPattern, ProjectionIgnoresOtherTags) {
  auto t = s1_trace({"S1SetupRequest"});
  t.push_back({5, TraceTag::rach, Component::mac, 0, "RAR something"});
  EXPECT_EQ(s1ap_projection(t), (std::vector<std::string>{"S1SetupRequest"}));
}

TEST(Scenarios, BundledFilesPass) {
  for (const auto& entry : std::filesystem::directory_iterator(kDir)) {
    if (entry.path().extension() != ".scn") continue;
    const auto s = load_scenario(entry.path());
    EXPECT_EQ(s.name, entry.path().stem().string());
    const auto r = run_scenario(s);
    for (const auto& a : r.assertions) EXPECT_TRUE(a.pass) << s.name << ": " << a.name << ": " << a.detail;
    EXPECT_EQ(r.exit_code, kExitPass) << s.name;
  }
}

TEST(Scenarios, WrongKeyFailsAttachPattern) {
  const auto s = load_scenario(kDir / "wrong-k.scn");
  const auto r = run_scenario(s);
  const std::vector<std::string> attach_pattern{"Setup", "SetupResp", "InitialUE", "DL", "UL", "DL", "UL",
                                       "DL", "UL", "DL", "UL", "UL"};
  const auto res = assert_s1ap_sequence(r.trace, attach_pattern);
  EXPECT_FALSE(res.pass);
  EXPECT_NE(res.detail.find("sequence ended after 8"), std::string::npos) << res.detail;
}

TEST(Scenarios, FailingAssertionGivesExitOne) {
  auto s = load_scenario(kDir / "hello-ntust.scn");
  s.assertions.push_back({"impossible", "sink_count", {"==", "2"}, 0});
  const auto r = run_scenario(s);
  EXPECT_EQ(r.exit_code, kExitAssertion);
  EXPECT_FALSE(r.assertions.back().pass);
}

TEST(Scenarios, SplitModeMatchesMonolithic) {
  auto mono = load_scenario(kDir / "hello-ntust.scn");
  auto split = mono;
  split.split = Split{Split::Kind::loopback, 47320};
  const auto a = run_scenario(mono);
  const auto b = run_scenario(split);
  EXPECT_EQ(b.exit_code, kExitPass);
  EXPECT_EQ(a.sink, b.sink);
  EXPECT_EQ(s1ap_projection(a.trace), s1ap_projection(b.trace));
}

TEST(ScenariosProperty, SameSeedSameTrace) {
  auto s = load_scenario(kDir / "multi-ue.scn");
  s.run_length = 8000;
  const auto a = run_scenario(s);
  const auto b = run_scenario(s);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.sink, b.sink);
}

TEST(ScenariosProperty, SinkConservesSentPayloads) {
  const auto r = run_scenario(load_scenario(kDir / "hello-ntust.scn"));
  ASSERT_EQ(r.sink.size(), 1u);
  EXPECT_EQ(r.sink[0].payload, to_bytes("Hello NTUST"));
}
