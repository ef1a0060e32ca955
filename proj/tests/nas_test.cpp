#include <gtest/gtest.h>

#include <random>

#include "nbsim/nas.hpp"

using namespace nbsim;
using namespace nbsim::nas;

TEST(Nas, RoundTripEveryType) {
  Rand r{};
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = static_cast<std::uint8_t>(i * 3);
  const std::vector<NasPdu> all{AttachRequest{"001010000000001", PcoType::epco},
                                IdentityRequest{},
                                IdentityResponse{"001010000000001"},
                                AuthenticationRequest{r},
                                AuthenticationResponse{Res{1, 2, 3, 4, 5, 6, 7, 8}},
                                AuthenticationReject{},
                                SecurityModeCommand{},
                                SecurityModeComplete{},
                                AttachAccept{"10.0.0.2"},
                                AttachComplete{},
                                EsmDataTransport{"140.118.123.99", 50000, to_bytes("Hello NTUST")}};
  for (const auto& m : all) {
    const auto b = encode(m);
    EXPECT_EQ(decode(b), m) << name_of(m);
    for (std::size_t n = 0; n < b.size(); ++n) EXPECT_THROW(decode(std::span(b).first(n)), CodecError);
  }
}

TEST(Nas, PayloadLimit) {
  EXPECT_NO_THROW(encode(EsmDataTransport{"1.2.3.4", 1, Bytes(kMaxUserPayload)}));
  EXPECT_THROW(encode(EsmDataTransport{"1.2.3.4", 1, Bytes(kMaxUserPayload + 1)}), CodecError);
}

TEST(Nas, AuthResIsXorOfFirstEightBytes) {
  std::mt19937 rng(1);
  for (int i = 0; i < 50; ++i) {
    Key k{};
    Rand r{};
    for (auto& x : k) x = static_cast<std::uint8_t>(rng());
    for (auto& x : r) x = static_cast<std::uint8_t>(rng());
    const auto res = auth_res(k, r);
    for (std::size_t j = 0; j < res.size(); ++j) EXPECT_EQ(res[j], k[j] ^ r[j]);
  }
}

TEST(Nas, Ipv4Parsing) {
  EXPECT_EQ(parse_ipv4("140.118.123.99"), 0x8c767b63u);
  EXPECT_EQ(format_ipv4(0x8c767b63u), "140.118.123.99");
  EXPECT_FALSE(parse_ipv4("256.0.0.1"));
  EXPECT_FALSE(parse_ipv4("1.2.3"));
  EXPECT_FALSE(parse_ipv4("1.2.3.4.5"));
  EXPECT_FALSE(parse_ipv4("a.b.c.d"));
  EXPECT_FALSE(parse_ipv4(""));
}

TEST(Nas, ImsiValidation) {
  EXPECT_TRUE(valid_imsi("001010000000001"));
  EXPECT_TRUE(valid_imsi("123456"));
  EXPECT_FALSE(valid_imsi("12345"));
  EXPECT_FALSE(valid_imsi("1234567890123456"));
  EXPECT_FALSE(valid_imsi("00101000000000x"));
}
