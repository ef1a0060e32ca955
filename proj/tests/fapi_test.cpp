#include <gtest/gtest.h>

#include <random>

#include "nbsim/fapi.hpp"

using namespace nbsim;
using namespace nbsim::fapi;

namespace {

struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  template <typename T>
  T u(std::uint64_t mod) { return static_cast<T>(rng() % mod); }
  bool b() { return (rng() & 1) != 0; }
  Bytes bytes(std::size_t max) {
    Bytes out(u<std::size_t>(max + 1));
    for (auto& x : out) x = static_cast<std::uint8_t>(rng());
    return out;
  }

  FapiMessage message() {
    const auto sfn = u<std::uint16_t>(1024);
    const auto sf = u<std::uint8_t>(10);
    switch (rng() % 7) {
      case 0: return SubframeIndication{sfn, sf};
      case 1: {
        DlConfigRequest m{sfn, sf, {}, {}};
        for (int i = u<int>(4); i > 0; --i) {
          m.dci_list.push_back(Dci{u<std::uint16_t>(65536), b() ? DciFormat::n0_ul_grant : DciFormat::n1_dl_assignment,
                                   u<std::uint8_t>(256), u<std::uint16_t>(65536), u<std::uint16_t>(65536),
                                   u<std::uint8_t>(256), u<std::uint16_t>(65536), b(), u<std::uint16_t>(65536)});
        }
        for (int i = u<int>(3); i > 0; --i) {
          m.pdu_list.push_back(DlPdu{u<std::uint16_t>(65536), static_cast<PduKind>(u<int>(3)), u<std::uint8_t>(256),
                                     u<std::uint16_t>(65536), bytes(40)});
        }
        return m;
      }
      case 2: {
        UlConfigRequest m{sfn, sf, {}};
        for (int i = u<int>(4); i > 0; --i) {
          m.grants.push_back(UlGrant{u<std::uint16_t>(65536), b() ? UlKind::harq_ack : UlKind::npusch,
                                     u<std::uint8_t>(256), u<std::uint16_t>(65536)});
        }
        return m;
      }
      case 3: return RachIndication{sfn, sf, u<std::uint8_t>(48), u<std::uint8_t>(3)};
      case 4: return RxIndication{u<std::uint16_t>(65536), bytes(64)};
      case 5: return CrcIndication{u<std::uint16_t>(65536), b()};
      default: return HarqIndication{u<std::uint16_t>(65536), b()};
    }
  }
};

}  // namespace

TEST(Fapi, SubframeIndicationIsBareHeader) {
  const auto f = encode(SubframeIndication{0, 0});
  ASSERT_EQ(f.size(), kHeaderSize);
  EXPECT_EQ(decode_header(f).body_len, 0);
  EXPECT_EQ(decode_header(f).msg_type, static_cast<std::uint16_t>(MsgType::subframe_indication));
}

TEST(Fapi, HeaderFieldsBigEndian) {
  const auto f = encode(SubframeIndication{0x0123, 7});
  EXPECT_EQ(to_hex(f), "0001000001230700");
}

TEST(Fapi, RachIndicationRoundTrip) {
  const FapiMessage m = RachIndication{1, 2, 0, 0};
  EXPECT_EQ(decode(encode(m)), m);
}

TEST(Fapi, SevenBytesIsTruncated) {
  const Bytes seven(7, 0);
  try {
    decode(seven);
    FAIL();
  } catch (const CodecError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
  }
}

TEST(Fapi, UnknownTypeAndLengthMismatch) {
  auto f = encode(CrcIndication{5, true});
  auto bad_type = f;
  bad_type[1] = 0x7f;
  EXPECT_THROW(decode(bad_type), CodecError);
  auto longer = f;
  longer.push_back(0);
  EXPECT_THROW(decode(longer), CodecError);
}

TEST(Fapi, RejectsOutOfRangeFieldsOnEncode) {
  EXPECT_THROW(encode(SubframeIndication{1024, 0}), CodecError);
  EXPECT_THROW(encode(SubframeIndication{0, 10}), CodecError);
  EXPECT_THROW(encode(RachIndication{0, 0, 48, 0}), CodecError);
  EXPECT_THROW(encode(RxIndication{1, Bytes(70000)}), CodecError);
}

TEST(FapiProperty, RandomRoundTrips) {
  Gen g(2024);
  for (int i = 0; i < 10000; ++i) {
    const auto m = g.message();
    const auto f = encode(m);
    ASSERT_EQ(decode(f), m) << "iteration " << i;
    ASSERT_EQ(decode_header(f).body_len + kHeaderSize, f.size());
  }
}

TEST(FapiProperty, EveryTruncationPrefixErrors) {
  Gen g(99);
  for (int i = 0; i < 500; ++i) {
    const auto f = encode(g.message());
    for (std::size_t n = 0; n < f.size(); ++n) {
      EXPECT_THROW(decode(std::span(f).first(n)), CodecError) << "prefix " << n << " of " << f.size();
    }
  }
}

TEST(FapiProperty, RandomBytesNeverCrash) {
  Gen g(5);
  for (int i = 0; i < 20000; ++i) {
    const auto junk = g.bytes(32);
    try {
      (void)decode(junk);
    } catch (const CodecError&) {
    }
  }
}
