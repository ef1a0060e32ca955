#include <gtest/gtest.h>

#include <random>
#include <tuple>

#include "nbsim/trace.hpp"

using namespace nbsim;

TEST(Trace, FormatAndParseRoundTrip) {
  const TraceEvent e{1234, TraceTag::rach, Component::mac, 257, "RAR ra-rnti=0x0001 tc-rnti=0x0101"};
  const auto line = format_event(e);
  EXPECT_EQ(line, "[1234] RACH mac/257 RAR ra-rnti=0x0001 tc-rnti=0x0101");
  EXPECT_EQ(parse_event(line), e);
  const TraceEvent bare{7, TraceTag::s1ap, Component::rrc, 0, ""};
  EXPECT_EQ(parse_event(format_event(bare)), bare);
  EXPECT_FALSE(parse_event("1234 RACH mac/1 x"));
  EXPECT_FALSE(parse_event("[1] NOPE mac/1 x"));
}

TEST(Trace, TagNames) {
  for (auto tag : all_tags()) EXPECT_EQ(parse_tag(to_string(tag)), tag);
  EXPECT_EQ(to_string(TraceTag::rrc_debug_asn), "RRC_DEBUG_ASN");
  EXPECT_EQ(to_string(TraceTag::nas_dbg_nas_msg), "NAS_DBG_NAS_MSG");
  EXPECT_EQ(parse_tag_list("RACH, HARQ"), (std::set<TraceTag>{TraceTag::rach, TraceTag::harq}));
  EXPECT_THROW(parse_tag_list("RACH,BOGUS"), Error);
}

TEST(Trace, FinalizeOrdersBySubframeComponentEntityThenEmission) {
  Trace t;
  t.emit(5, TraceTag::dci, Component::ue, 2, "a");
  t.emit(5, TraceTag::dci, Component::phy, 0, "b");
  t.emit(4, TraceTag::dci, Component::ue, 1, "c");
  t.emit(5, TraceTag::dci, Component::ue, 1, "d");
  t.emit(5, TraceTag::harq, Component::ue, 1, "e");
  t.finalize();
  std::string order;
  for (const auto& e : t.events()) order += e.detail;
  EXPECT_EQ(order, "cbdea");
}

TEST(Trace, FilterKeepsOrderAndOnlySelectedTags) {
  Trace t;
  t.emit(1, TraceTag::rach, Component::ue, 1, "1");
  t.emit(2, TraceTag::dci, Component::ue, 1, "2");
  t.emit(3, TraceTag::rach, Component::ue, 1, "3");
  auto f = filter_trace(t.events(), {TraceTag::rach});
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0].detail, "1");
  EXPECT_EQ(f[1].detail, "3");
  EXPECT_EQ(t.count(TraceTag::dci), 1u);
  EXPECT_TRUE(filter_trace(t.events(), {}).empty());
}

TEST(TraceProperty, FilterIsSubsequenceAndIdempotent) {
  std::mt19937_64 rng(3);
  const auto tags = all_tags();
  const std::vector<TraceTag> tag_vec(tags.begin(), tags.end());
  for (int round = 0; round < 200; ++round) {
    std::vector<TraceEvent> events;
    for (int i = static_cast<int>(rng() % 60); i > 0; --i) {
      events.push_back({rng() % 100, tag_vec[rng() % tag_vec.size()], static_cast<Component>(rng() % 5),
                        static_cast<std::uint32_t>(rng() % 4), std::to_string(i)});
    }
    std::set<TraceTag> keep;
    for (auto t : tag_vec) {
      if (rng() & 1) keep.insert(t);
    }
    const auto f = filter_trace(events, keep);
    EXPECT_EQ(filter_trace(f, keep), f);
    EXPECT_EQ(filter_trace(events, tags), events);
    std::size_t j = 0;
    for (const auto& e : events) {
      if (j < f.size() && e == f[j]) ++j;
    }
    EXPECT_EQ(j, f.size());
    for (const auto& e : f) EXPECT_TRUE(keep.count(e.tag));
  }
}

TEST(TraceProperty, FinalizedTraceIsSortedAndFormatRoundTrips) {
  std::mt19937_64 rng(4);
  Trace t;
  for (int i = 0; i < 500; ++i) {
    t.emit(rng() % 50, static_cast<TraceTag>(rng() % kNumTraceTags), static_cast<Component>(rng() % 5),
           static_cast<std::uint32_t>(rng() % 3), "x" + std::to_string(i));
  }
  t.finalize();
  const auto& ev = t.events();
  for (std::size_t i = 1; i < ev.size(); ++i) {
    const auto key = [](const TraceEvent& e) { return std::tuple(e.abs_sf, e.source, e.entity); };
    EXPECT_LE(key(ev[i - 1]), key(ev[i]));
  }
  for (const auto& e : ev) EXPECT_EQ(parse_event(format_event(e)), e);
}
