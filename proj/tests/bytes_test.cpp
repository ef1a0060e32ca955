#include <gtest/gtest.h>

#include <random>

#include "nbsim/bytes.hpp"

using namespace nbsim;

TEST(Hex, RoundTripsRandomBuffers) {
  std::mt19937 rng(7);
  for (int n = 0; n < 200; ++n) {
    Bytes b(static_cast<std::size_t>(rng() % 64));
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    auto back = from_hex(to_hex(b));
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(*back, b);
  }
}

TEST(Hex, HelloNtustPayload) {
  auto b = from_hex("48656c6c6f204e54555354");
  ASSERT_TRUE(b);
  EXPECT_EQ(std::string(b->begin(), b->end()), "Hello NTUST");
  EXPECT_EQ(to_hex(to_bytes("Hello NTUST")), "48656c6c6f204e54555354");
}

TEST(Hex, AcceptsUpperCaseRejectsGarbage) {
  EXPECT_EQ(from_hex("ABcd"), (Bytes{0xab, 0xcd}));
  EXPECT_FALSE(from_hex("abc"));
  EXPECT_FALSE(from_hex("zz"));
  EXPECT_EQ(from_hex(""), Bytes{});
}

TEST(ByteIo, BigEndianLayout) {
  ByteWriter w;
  w.u8(0x01);
  w.u16(0x0203);
  w.u32(0x04050607);
  w.u64(0x08090a0b0c0d0e0fULL);
  EXPECT_EQ(to_hex(w.buffer()), "0102030405060708090a0b0c0d0e0f");
  ByteReader r(w.buffer());
  EXPECT_EQ(r.u8(), 0x01);
  EXPECT_EQ(r.u16(), 0x0203);
  EXPECT_EQ(r.u32(), 0x04050607u);
  EXPECT_EQ(r.u64(), 0x08090a0b0c0d0e0fULL);
  EXPECT_TRUE(r.empty());
  EXPECT_THROW(r.u8(), CodecError);
}

TEST(ByteIo, BlobAndStringPrefixes) {
  ByteWriter w;
  w.blob16(Bytes{1, 2, 3});
  w.str8("abc");
  ByteReader r(w.buffer());
  EXPECT_EQ(r.blob16(), (Bytes{1, 2, 3}));
  EXPECT_EQ(r.str8(), "abc");
  r.expect_end("test");
}

TEST(ByteIo, ShortReadsThrow) {
  const Bytes one{0x00};
  ByteReader r(one);
  EXPECT_THROW(r.u16(), CodecError);
  const Bytes claims_five{0x00, 0x05, 0x01};
  ByteReader r2(claims_five);
  EXPECT_THROW(r2.blob16(), CodecError);
}
