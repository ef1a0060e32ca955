#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "nbsim/config.hpp"

using namespace nbsim;
using namespace nbsim::config;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string reference_config() { return read_file(std::string(NBSIM_SOURCE_DIR) + "/configs/enb_b28.conf"); }

ConfigGroup random_group(std::mt19937_64& rng, int depth) {
  ConfigGroup g;
  const int n = static_cast<int>(rng() % 5);
  for (int i = 0; i < n; ++i) {
    ConfigEntry e;
    e.name = "k" + std::to_string(i) + "_" + std::to_string(rng() % 100);
    switch (rng() % (depth > 0 ? 4 : 2)) {
      case 0: e.node.value = static_cast<std::int64_t>(rng()); break;
      case 1: {
        std::string s;
        const char alphabet[] = "ab \"\\/#;=,xyz09";
        for (int c = static_cast<int>(rng() % 8); c > 0; --c) s.push_back(alphabet[rng() % (sizeof alphabet - 1)]);
        e.node.value = s;
        break;
      }
      case 2: e.node.value = random_group(rng, depth - 1); break;
      default: {
        ConfigList l;
        for (int j = static_cast<int>(rng() % 3); j > 0; --j) l.push_back(random_group(rng, depth - 1));
        e.node.value = l;
      }
    }
    g.entries.push_back(std::move(e));
  }
  return g;
}

}  // namespace

TEST(ConfigGrammar, ScalarsGroupsLists) {
  auto t = parse_config(R"(a = 1; b = "x"; c : { d = -2L; }; e = ({ f = 3; }, { f = 4; });)");
  ASSERT_EQ(t.entries.size(), 4u);
  EXPECT_EQ(std::get<std::int64_t>(t.find("a")->value), 1);
  EXPECT_EQ(std::get<std::string>(t.find("b")->value), "x");
  EXPECT_EQ(std::get<std::int64_t>(std::get<ConfigGroup>(t.find("c")->value).find("d")->value), -2);
  EXPECT_EQ(std::get<ConfigList>(t.find("e")->value).size(), 2u);
}

TEST(ConfigGrammar, CommentsAndElisions) {
  auto t = parse_config("# hash\n// slashes\n/* block\n */ x = 5; ...\n////////// banner\ny = 6;");
  EXPECT_EQ(std::get<std::int64_t>(t.find("x")->value), 5);
  EXPECT_EQ(std::get<std::int64_t>(t.find("y")->value), 6);
}

TEST(ConfigGrammar, ErrorsCarryPosition) {
  try {
    parse_config("a = 1;\nb = ;\n");
    FAIL() << "no error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_GT(e.column(), 0u);
  }
  EXPECT_THROW(parse_config("a = 1; a = 2;"), ConfigError);
  EXPECT_THROW(parse_config("a = \"unterminated"), ConfigError);
  EXPECT_THROW(parse_config("a = { b = 1;"), ConfigError);
}

TEST(ConfigGrammar, SerializeRoundTripProperty) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const auto tree = random_group(rng, 3);
    const auto text = serialize_config(tree);
    ASSERT_EQ(parse_config(text), tree) << text;
  }
}

// Expected values are the literals in the reference configuration.
TEST(EnbConfig, ReferenceCellValues) {
  const auto c = load_enb_config(reference_config());
  for (const auto& r : c.rach) {
    EXPECT_EQ(r.response_window, 8);
    EXPECT_EQ(r.contention_resolution_timer, 32);
    EXPECT_EQ(r.preamble_initial_target_power_dbm, -90);
    EXPECT_EQ(r.msg3_range_start, Msg3RangeStart::zero);
    EXPECT_EQ(r.max_preamble_attempts, 3);
    EXPECT_EQ(r.repetitions_per_attempt, 1);
  }
  EXPECT_EQ(c.css.r_max, 4);
  EXPECT_EQ(c.css.start_sf_g_halves, 4);
  EXPECT_EQ(c.css.offset, CssOffset::one_fourth);
  EXPECT_EQ(c.cell.eutra_band, 28);
  EXPECT_EQ(c.cell.downlink_frequency_hz, 780'000'000);
  EXPECT_EQ(c.cell.uplink_frequency_offset_hz, -55'000'000);
  EXPECT_EQ(c.cell.uplink_frequency_hz(), 725'000'000);
  EXPECT_EQ(c.network.mme_ipv4, "140.118.123.99");
  EXPECT_EQ(c.network.enb_s1_mme_ipv4_cidr, "140.118.123.103/24");
  EXPECT_EQ(c.network.enb_s1u_ipv4_cidr, "140.118.123.103/24");
  EXPECT_EQ(c.network.enb_ipv4(), "140.118.123.103");
  EXPECT_EQ(c.network.s1u_port, 2152);
}

TEST(EnbConfig, CssPeriodAndOffset) {
  NpdcchCssConfig css{4, 4, CssOffset::one_fourth};
  EXPECT_EQ(css.period(), 8);
  EXPECT_EQ(css.offset_sf(), 2);
  css.start_sf_g_halves = 3;  // G = 1.5
  css.r_max = 2;
  EXPECT_EQ(css.period(), 3);
  css.r_max = 1;
  EXPECT_THROW(css.period(), ConfigError);
}

TEST(EnbConfig, PreambleDuration) {
  RachCeConfig r;
  r.repetitions_per_attempt = 1;
  EXPECT_EQ(r.preamble_duration_sf(), 6);  // 5.6 ms rounded up
  r.repetitions_per_attempt = 4;
  EXPECT_EQ(r.preamble_duration_sf(), 23);  // 22.4 ms
}

TEST(EnbConfig, RejectsOutOfRangeValues) {
  const std::string base = reference_config();
  auto with = [&](const std::string& from, const std::string& to) {
    auto t = base;
    t.replace(t.find(from), from.size(), to);
    return t;
  };
  EXPECT_THROW(load_enb_config(with("rach_raResponseWindowSize_NB = 8", "rach_raResponseWindowSize_NB = 9")),
               ConfigError);
  EXPECT_THROW(load_enb_config(with("npdcch_Offset_RA = \"oneFourth\"", "npdcch_Offset_RA = \"half\"")), ConfigError);
  EXPECT_THROW(load_enb_config(with("eutra_band = 28;", "")), ConfigError);
  EXPECT_THROW(load_enb_config(with("-90;", "-91;")), ConfigError);
}

TEST(EnbConfig, PerCeLevelOverrides) {
  auto text = reference_config();
  text += "\nrach_ce_levels = ({ maxNumPreambleAttemptCE_NB = 5; }, { numRepetitionsPerPreambleAttempt = 2; });\n";
  // The list is looked up next to the other RACH keys or at the root.
  const auto c = load_enb_config(text);
  EXPECT_EQ(c.rach[0].max_preamble_attempts, 5);
  EXPECT_EQ(c.rach[1].max_preamble_attempts, 3);
  EXPECT_EQ(c.rach[1].repetitions_per_attempt, 2);
  EXPECT_EQ(c.rach[2].repetitions_per_attempt, 1);
}

TEST(Earfcn, FieldObservedOverride) {
  EXPECT_EQ(earfcn_to_carrier(28, 9448), (Carrier{780'000'000, 725'000'000}));
  // Plain band arithmetic: 758 MHz + 0.1 MHz * (9448 - 9210).
  EXPECT_EQ(earfcn_to_carrier(28, 9448, EarfcnMapping::standard).dl_hz, 781'800'000);
}

TEST(Earfcn, BandFormulaOracle) {
  struct Row {
    int band, n_offs, n_max;
    std::int64_t dl_low, duplex;
  };
  // Band edges from the E-UTRA channel arrangement table.
  const Row rows[] = {{1, 0, 599, 2'110'000'000, -190'000'000},   {3, 1200, 1949, 1'805'000'000, -95'000'000},
                      {5, 2400, 2649, 869'000'000, -45'000'000},   {8, 3450, 3799, 925'000'000, -45'000'000},
                      {20, 6150, 6449, 791'000'000, 41'000'000},   {28, 9210, 9659, 758'000'000, -55'000'000}};
  for (const auto& r : rows) {
    for (int n = r.n_offs; n <= r.n_max; n += 7) {
      const auto c = earfcn_to_carrier(r.band, n, EarfcnMapping::standard);
      EXPECT_EQ(c.dl_hz, r.dl_low + 100'000LL * (n - r.n_offs));
      EXPECT_EQ(c.ul_hz - c.dl_hz, r.duplex);
    }
    EXPECT_THROW(earfcn_to_carrier(r.band, r.n_max + 1), ConfigError);
  }
  EXPECT_THROW(earfcn_to_carrier(99, 0), ConfigError);
  EXPECT_EQ(earfcn_to_carrier(28, 9300, EarfcnMapping::standard, -10).ul_hz,
            earfcn_to_carrier(28, 9300, EarfcnMapping::standard).dl_hz - 10);
}
