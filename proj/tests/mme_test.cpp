#include <gtest/gtest.h>

#include "nbsim/mme.hpp"

using namespace nbsim;
using namespace nbsim::core;

namespace {

const std::string kImsi = "001010000000001";

nas::Key key_of(std::uint8_t base) {
  nas::Key k{};
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = static_cast<std::uint8_t>(base + i);
  return k;
}

// Pulls the single DL NAS PDU out of an MME reply batch.
nas::NasPdu only_nas(const std::vector<s1ap::S1apMessage>& out, s1ap::UeIds* ids = nullptr) {
  EXPECT_EQ(out.size(), 1u);
  const auto* dl = std::get_if<s1ap::DownlinkNasTransport>(&out.at(0));
  EXPECT_NE(dl, nullptr);
  if (ids != nullptr) *ids = dl->ids;
  return nas::decode(dl->nas);
}

struct Harness {
  Trace trace;
  Mme mme;
  explicit Harness(bool identity = true, std::uint64_t seed = 1)
      : mme(MmeOptions{"test-mme", identity, seed}, table(), &trace) {
    mme.handle_s1(s1ap::S1SetupRequest{1, "enb"}, 0);
  }
  static SubscriberTable table() {
    SubscriberTable t;
    t.add(kImsi, key_of(0));
    return t;
  }

  // Runs the dialogue with `k` on the UE side; returns the last NAS the MME sent.
  nas::NasPdu attach(const nas::Key& k, s1ap::UeIds& ids, std::uint32_t enb_ue_id = 7) {
    auto pdu = only_nas(mme.handle_s1(s1ap::InitialUeMessage{enb_ue_id, nas::encode(nas::AttachRequest{kImsi})}, 1), &ids);
    EXPECT_EQ(ids.enb_ue_id, enb_ue_id);
    auto ul = [&](const nas::NasPdu& p, AbsSf t) {
      return mme.handle_s1(s1ap::UplinkNasTransport{ids, nas::encode(p)}, t);
    };
    if (std::holds_alternative<nas::IdentityRequest>(pdu)) pdu = only_nas(ul(nas::IdentityResponse{kImsi}, 2));
    const auto* auth = std::get_if<nas::AuthenticationRequest>(&pdu);
    if (auth == nullptr) return pdu;
    nas::Res res{};
    for (std::size_t i = 0; i < res.size(); ++i) res[i] = k[i] ^ auth->rand[i];
    pdu = only_nas(ul(nas::AuthenticationResponse{res}, 3));
    if (!std::holds_alternative<nas::SecurityModeCommand>(pdu)) return pdu;
    pdu = only_nas(ul(nas::SecurityModeComplete{}, 4));
    if (std::holds_alternative<nas::AttachAccept>(pdu)) EXPECT_TRUE(ul(nas::AttachComplete{}, 5).empty());
    return pdu;
  }
};

}  // namespace

TEST(Mme, FullAttachAssignsFirstPoolAddress) {
  Harness h;
  EXPECT_TRUE(h.mme.s1_established());
  s1ap::UeIds ids;
  const auto last = h.attach(key_of(0), ids);
  const auto* acc = std::get_if<nas::AttachAccept>(&last);
  ASSERT_NE(acc, nullptr);
  EXPECT_EQ(acc->ip, "10.0.0.2");
  EXPECT_EQ(h.mme.attached_count(), 1u);
}

TEST(Mme, WrongKeyIsRejected) {
  Harness h;
  s1ap::UeIds ids;
  EXPECT_TRUE(std::holds_alternative<nas::AuthenticationReject>(h.attach(key_of(100), ids)));
  EXPECT_EQ(h.mme.attached_count(), 0u);
}

TEST(Mme, IdentityRequestCanBeSkipped) {
  Harness h(false);
  s1ap::UeIds ids;
  const auto first = only_nas(h.mme.handle_s1(s1ap::InitialUeMessage{3, nas::encode(nas::AttachRequest{kImsi})}, 1));
  EXPECT_TRUE(std::holds_alternative<nas::AuthenticationRequest>(first));
  Harness h2(false);
  EXPECT_TRUE(std::holds_alternative<nas::AttachAccept>(h2.attach(key_of(0), ids)));
}

TEST(Mme, UnknownImsiIsRejected) {
  Harness h;
  const auto out = h.mme.handle_s1(s1ap::InitialUeMessage{1, nas::encode(nas::AttachRequest{"001019999999999"})}, 1);
  s1ap::UeIds ids;
  only_nas(out, &ids);
  const auto r = only_nas(h.mme.handle_s1(s1ap::UplinkNasTransport{ids, nas::encode(nas::IdentityResponse{"001019999999999"})}, 2));
  EXPECT_TRUE(std::holds_alternative<nas::AuthenticationReject>(r));
}

TEST(Mme, DataAfterAttachLandsInSink) {
  Harness h;
  s1ap::UeIds ids;
  h.attach(key_of(0), ids);
  const auto payload = to_bytes("Hello NTUST");
  EXPECT_TRUE(h.mme.handle_s1(s1ap::UplinkNasTransport{ids, nas::encode(nas::EsmDataTransport{"140.118.123.99", 8888, payload})}, 9).empty());
  ASSERT_EQ(h.mme.sink().size(), 1u);
  EXPECT_EQ(h.mme.sink()[0], (UdpSinkRecord{"140.118.123.99", 8888, payload, 9}));
  EXPECT_EQ(format_sink_record(h.mme.sink()[0]), "9 140.118.123.99:8888 48656c6c6f204e54555354");
  EXPECT_EQ(h.trace.count(TraceTag::s1u), 0u);
}

TEST(Mme, DataBeforeAttachIsIgnored) {
  Harness h;
  s1ap::UeIds ids;
  only_nas(h.mme.handle_s1(s1ap::InitialUeMessage{1, nas::encode(nas::AttachRequest{kImsi})}, 1), &ids);
  h.mme.handle_s1(s1ap::UplinkNasTransport{ids, nas::encode(nas::EsmDataTransport{"1.2.3.4", 1, Bytes{1}})}, 2);
  EXPECT_TRUE(h.mme.sink().empty());
  EXPECT_GE(h.trace.count(TraceTag::warn), 1u);
}

TEST(Mme, MessagesBeforeSetupAreDropped) {
  Trace t;
  Mme m(MmeOptions{}, Harness::table(), &t);
  EXPECT_TRUE(m.handle_s1(s1ap::InitialUeMessage{1, nas::encode(nas::AttachRequest{kImsi})}, 0).empty());
  EXPECT_EQ(t.count(TraceTag::warn), 1u);
}

TEST(Mme, MismatchedAssociationDropped) {
  Harness h;
  s1ap::UeIds ids;
  only_nas(h.mme.handle_s1(s1ap::InitialUeMessage{1, nas::encode(nas::AttachRequest{kImsi})}, 1), &ids);
  ids.enb_ue_id += 1;
  EXPECT_TRUE(h.mme.handle_s1(s1ap::UplinkNasTransport{ids, nas::encode(nas::IdentityResponse{kImsi})}, 2).empty());
}

TEST(IpPool, SequentialThenExhausted) {
  IpPool p;
  EXPECT_EQ(p.allocate(), "10.0.0.2");
  EXPECT_EQ(p.allocate(), "10.0.0.3");
  for (int i = 0; i < 251; ++i) p.allocate();
  EXPECT_EQ(p.allocated(), 253u);
  EXPECT_THROW(p.allocate(), Error);
}

TEST(SubscriberTable, RejectsBadAndDuplicate) {
  SubscriberTable t;
  t.add(kImsi, key_of(0));
  EXPECT_THROW(t.add(kImsi, key_of(1)), ConfigError);
  EXPECT_THROW(t.add("12ab", key_of(1)), ConfigError);
  EXPECT_NE(t.find(kImsi), nullptr);
  EXPECT_EQ(t.find("001010000000002"), nullptr);
}
