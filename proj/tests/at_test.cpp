#include <gtest/gtest.h>

#include "nbsim/ue.hpp"

using namespace nbsim;
using namespace nbsim::ue;

using Lines = std::vector<std::string>;

TEST(At, TranscriptExchanges) {
  UeState st;
  EXPECT_EQ(execute_at("AT+NRB", st), (Lines{"REBOOTING", "OK"}));
  EXPECT_EQ(execute_at("AT+NEARFCN=0,9448", st), (Lines{"OK"}));
  EXPECT_EQ(execute_at("AT+NSOCR=DGRAM,17,8888,1", st), (Lines{"0", "OK"}));
  st.phase = Phase::attached;
  EXPECT_EQ(execute_at("AT+NSOST=0,140.118.123.99,50000,11,48656c6c6f204e54555354", st), (Lines{"0,11"}));
  ASSERT_EQ(st.outbox.size(), 1u);
  EXPECT_EQ(st.outbox[0].dest_ip, "140.118.123.99");
  EXPECT_EQ(st.outbox[0].dest_port, 50000);
  EXPECT_EQ(st.outbox[0].payload, to_bytes("Hello NTUST"));
}

TEST(At, LengthMismatchIsError) {
  UeState st;
  st.phase = Phase::attached;
  execute_at("AT+NSOCR=DGRAM,17,8888,1", st);
  EXPECT_EQ(execute_at("AT+NSOST=0,1.2.3.4,50000,5,48656c", st), (Lines{"ERROR"}));
  EXPECT_TRUE(st.outbox.empty());
}

TEST(At, SendBeforeAttachIsError) {
  UeState st;
  execute_at("AT+NSOCR=DGRAM,17,8888,1", st);
  EXPECT_EQ(execute_at("AT+NSOST=0,1.2.3.4,5,1,00", st), (Lines{"ERROR"}));
}

TEST(At, ProvisioningScriptAllOk) {
  UeState st;
  for (const char* l : {"AT+NRB", "AT+NCONFIG=AUTOCONNECT,TRUE", "AT+NCONFIG=CR_0354_0338_SCRAMBLING,FALSE",
                        "AT+NCONFIG=CR_0859_SI_AVOID,FALSE", "AT+NCONFIG=PCO_IE_TYPE,EPCO",
                        "AT+NCONFIG=RELEASE_VERSION,13", "AT+NCONFIG=MULTITONE,FALSE",
                        "AT+CGDCONT= 0,\"IP\",,0,0,,,,,0", "AT+NEARFCN=0,9448", "AT+CGATT=1"}) {
    EXPECT_EQ(execute_at(l, st).back(), "OK") << l;
  }
  EXPECT_TRUE(st.nv.autoconnect);
  EXPECT_FALSE(st.nv.scrambling);
  EXPECT_FALSE(st.nv.si_avoid);
  EXPECT_TRUE(st.nv.pco_ie_epco);
  EXPECT_FALSE(st.nv.multitone);
  EXPECT_TRUE(st.attach_requested);
  EXPECT_EQ(st.earfcn_lock, (EarfcnLock{0, 9448}));
  EXPECT_EQ(st.nv.pdp_contexts, (Lines{"0,\"IP\",,0,0,,,,,0"}));
}

TEST(At, MisspelledBooleanRejected) {
  UeState st;
  EXPECT_EQ(execute_at("AT+NCONFIG=MULTITONE,FLASE", st), (Lines{"ERROR"}));
  EXPECT_FALSE(st.nv.multitone);
}

TEST(At, ReleaseVersionRange) {
  UeState st;
  EXPECT_EQ(execute_at("AT+NCONFIG=RELEASE_VERSION,14", st), (Lines{"OK"}));
  EXPECT_EQ(execute_at("AT+NCONFIG=RELEASE_VERSION,12", st), (Lines{"ERROR"}));
  EXPECT_EQ(st.nv.release_version, 14);
}

TEST(At, UnknownKeysStoredVerbatim) {
  UeState st;
  EXPECT_EQ(execute_at("AT+NCONFIG=CR_1234_FOO,bar", st), (Lines{"OK"}));
  EXPECT_EQ(st.nv.other.at("CR_1234_FOO"), "bar");
  const auto q = execute_at("AT+NCONFIG?", st);
  EXPECT_NE(std::find(q.begin(), q.end(), "+NCONFIG:CR_1234_FOO,bar"), q.end());
  EXPECT_EQ(q.back(), "OK");
}

TEST(At, UnknownCommandIsError) {
  UeState st;
  EXPECT_EQ(execute_at("AT+FOO", st), (Lines{"ERROR"}));
  EXPECT_EQ(execute_at("hello", st), (Lines{"ERROR"}));
  EXPECT_EQ(execute_at("AT", st), (Lines{"OK"}));
}

TEST(At, SocketLimitsAndClose) {
  UeState st;
  for (int i = 0; i < kMaxSockets; ++i) {
    EXPECT_EQ(execute_at("AT+NSOCR=DGRAM,17," + std::to_string(9000 + i) + ",0", st).front(), std::to_string(i));
  }
  EXPECT_EQ(execute_at("AT+NSOCR=DGRAM,17,9100,0", st), (Lines{"ERROR"}));
  EXPECT_EQ(execute_at("AT+NSOCL=3", st), (Lines{"OK"}));
  EXPECT_EQ(execute_at("AT+NSOCR=DGRAM,17,9100,0", st), (Lines{"3", "OK"}));
  EXPECT_EQ(execute_at("AT+NSOCR=DGRAM,17,9000,0", st), (Lines{"ERROR"}));  // port in use
  EXPECT_EQ(execute_at("AT+NSOCR=STREAM,6,9200,0", st), (Lines{"ERROR"}));
}

TEST(AtProperty, NvSurvivesRebootVolatileDoesNot) {
  UeState st;
  execute_at("AT+NCONFIG=AUTOCONNECT,TRUE", st);
  execute_at("AT+NCONFIG=RELEASE_VERSION,14", st);
  execute_at("AT+NCONFIG=VENDOR_X,1", st);
  execute_at("AT+CGDCONT=1,\"IP\",\"apn\"", st);
  execute_at("AT+NEARFCN=0,9448", st);
  execute_at("AT+NSOCR=DGRAM,17,8888,1", st);
  execute_at("AT+CGATT=1", st);
  st.phase = Phase::attached;
  st.assigned_ip = "10.0.0.2";
  const auto nv = st.nv;
  execute_at("AT+NRB", st);
  EXPECT_EQ(st.nv, nv);
  EXPECT_TRUE(st.sockets.empty());
  EXPECT_FALSE(st.attach_requested);
  EXPECT_FALSE(st.earfcn_lock);
  EXPECT_FALSE(st.assigned_ip);
  EXPECT_EQ(st.phase, Phase::powered_on);
  EXPECT_TRUE(st.reboot_pending);
}

TEST(At, CgattQueryAndDetach) {
  UeState st;
  EXPECT_EQ(execute_at("AT+CGATT?", st), (Lines{"+CGATT:0", "OK"}));
  st.phase = Phase::attached;
  EXPECT_EQ(execute_at("AT+CGATT?", st), (Lines{"+CGATT:1", "OK"}));
  EXPECT_EQ(execute_at("AT+CGATT=0", st), (Lines{"OK"}));
  EXPECT_TRUE(st.detach_pending);
  EXPECT_EQ(execute_at("AT+CGATT=2", st), (Lines{"ERROR"}));
}
