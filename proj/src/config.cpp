#include "nbsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace nbsim::config {

const ConfigNode* ConfigGroup::find(std::string_view name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e.node;
  }
  return nullptr;
}

bool ConfigGroup::operator==(const ConfigGroup& other) const { return entries == other.entries; }

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

namespace {

enum class Tok { name, integer, string, punct, ellipsis, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  std::int64_t integer = 0;
  char punct = 0;
  std::size_t line = 1;
  std::size_t column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_space_and_comments();
    Token t;
    t.line = line_;
    t.column = col_;
    if (pos_ >= text_.size()) return t;

    char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '*') {
      t.kind = Tok::name;
      while (pos_ < text_.size()) {
        char d = text_[pos_];
        if (!(std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '-' || d == '*')) break;
        t.text.push_back(d);
        advance();
      }
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+') {
      return lex_integer(t);
    }
    if (c == '"') return lex_string(t);
    if (c == '.' && text_.substr(pos_, 3) == "...") {
      advance();
      advance();
      advance();
      t.kind = Tok::ellipsis;
      return t;
    }
    if (std::string_view("=:;,{}()").find(c) != std::string_view::npos) {
      t.kind = Tok::punct;
      t.punct = c;
      advance();
      return t;
    }
    throw ConfigError(std::string("unexpected character '") + c + "'", line_, col_);
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '#' || text_.substr(pos_, 2) == "//") {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (text_.substr(pos_, 2) == "/*") {
        std::size_t line = line_, col = col_;
        advance();
        advance();
        while (pos_ < text_.size() && text_.substr(pos_, 2) != "*/") advance();
        if (pos_ >= text_.size()) throw ConfigError("unterminated block comment", line, col);
        advance();
        advance();
      } else {
        break;
      }
    }
  }

  Token lex_integer(Token t) {
    bool negative = false;
    if (text_[pos_] == '-' || text_[pos_] == '+') {
      negative = text_[pos_] == '-';
      advance();
    }
    int base = 10;
    if (text_.substr(pos_, 2) == "0x" || text_.substr(pos_, 2) == "0X") {
      base = 16;
      advance();
      advance();
    }
    std::uint64_t magnitude = 0;
    std::size_t digits = 0;
    const std::uint64_t limit = negative ? std::uint64_t{1} << 63 : (std::uint64_t{1} << 63) - 1;
    while (pos_ < text_.size()) {
      char d = text_[pos_];
      int v = -1;
      if (std::isdigit(static_cast<unsigned char>(d))) v = d - '0';
      else if (base == 16 && std::isxdigit(static_cast<unsigned char>(d)))
        v = std::tolower(static_cast<unsigned char>(d)) - 'a' + 10;
      if (v < 0) break;
      if (magnitude > (limit - static_cast<std::uint64_t>(v)) / static_cast<std::uint64_t>(base)) {
        throw ConfigError("integer does not fit in 64 bits", t.line, t.column);
      }
      magnitude = magnitude * static_cast<std::uint64_t>(base) + static_cast<std::uint64_t>(v);
      ++digits;
      advance();
    }
    if (digits == 0) throw ConfigError("malformed integer", t.line, t.column);
    // 780000000L / 5LL
    while (pos_ < text_.size() && (text_[pos_] == 'L' || text_[pos_] == 'l')) advance();
    if (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
      throw ConfigError("malformed integer", t.line, t.column);
    }
    t.kind = Tok::integer;
    t.integer = negative ? static_cast<std::int64_t>(0 - magnitude) : static_cast<std::int64_t>(magnitude);
    return t;
  }

  Token lex_string(Token t) {
    t.kind = Tok::string;
    // Adjacent literals concatenate: "ab" "cd" == "abcd".
    while (pos_ < text_.size() && text_[pos_] == '"') {
      advance();
      for (;;) {
        if (pos_ >= text_.size() || text_[pos_] == '\n') {
          throw ConfigError("unterminated string", t.line, t.column);
        }
        char c = text_[pos_];
        advance();
        if (c == '"') break;
        if (c == '\\') {
          if (pos_ >= text_.size()) throw ConfigError("unterminated string", t.line, t.column);
          char e = text_[pos_];
          advance();
          switch (e) {
            case 'n': t.text.push_back('\n'); break;
            case 't': t.text.push_back('\t'); break;
            case '"': t.text.push_back('"'); break;
            case '\\': t.text.push_back('\\'); break;
            default: throw ConfigError(std::string("unknown escape \\") + e, line_, col_ - 1);
          }
        } else {
          t.text.push_back(c);
        }
      }
      std::size_t save_pos = pos_, save_line = line_, save_col = col_;
      skip_space_and_comments();
      if (pos_ >= text_.size() || text_[pos_] != '"') {
        pos_ = save_pos;
        line_ = save_line;
        col_ = save_col;
        break;
      }
    }
    return t;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) { bump(); }

  ConfigGroup parse_document() {
    ConfigGroup root = parse_settings(0);
    if (cur_.kind != Tok::end) fail("unexpected '" + describe(cur_) + "'");
    return root;
  }

 private:
  void bump() { cur_ = lexer_.next(); }

  [[noreturn]] void fail(const std::string& message) const {
    throw ConfigError(message, cur_.line, cur_.column);
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Tok::name: return t.text;
      case Tok::integer: return std::to_string(t.integer);
      case Tok::string: return "\"" + t.text + "\"";
      case Tok::punct: return std::string(1, t.punct);
      case Tok::ellipsis: return "...";
      case Tok::end: return "end of input";
    }
    return "?";
  }

  bool is_punct(char p) const { return cur_.kind == Tok::punct && cur_.punct == p; }

  /// Settings until `close` (or end of input when close == 0).
  ConfigGroup parse_settings(char close) {
    ConfigGroup group;
    std::set<std::string> seen;
    for (;;) {
      while (cur_.kind == Tok::ellipsis) bump();
      if (cur_.kind == Tok::end) {
        if (close != 0) fail(std::string("expected '") + close + "' before end of input");
        return group;
      }
      if (close != 0 && is_punct(close)) return group;
      if (cur_.kind != Tok::name) fail("expected a setting name, found '" + describe(cur_) + "'");

      Token name = cur_;
      bump();
      if (!is_punct('=') && !is_punct(':')) fail("expected '=' after '" + name.text + "'");
      bump();
      ConfigNode node = parse_value();
      if (is_punct(';') || is_punct(',')) bump();

      if (!seen.insert(name.text).second) {
        throw ConfigError("duplicate setting '" + name.text + "'", name.line, name.column);
      }
      group.entries.push_back(ConfigEntry{name.text, std::move(node)});
    }
  }

  ConfigNode parse_value() {
    ConfigNode node;
    if (cur_.kind == Tok::integer) {
      node.value = cur_.integer;
      bump();
    } else if (cur_.kind == Tok::string) {
      node.value = cur_.text;
      bump();
    } else if (is_punct('{')) {
      bump();
      node.value = parse_settings('}');
      bump();
    } else if (is_punct('(')) {
      bump();
      node.value = parse_list();
    } else {
      fail("expected a value, found '" + describe(cur_) + "'");
    }
    return node;
  }

  ConfigList parse_list() {
    ConfigList list;
    for (;;) {
      while (cur_.kind == Tok::ellipsis) bump();
      if (is_punct(')')) {
        bump();
        return list;
      }
      if (!is_punct('{')) fail("lists may only contain groups, found '" + describe(cur_) + "'");
      bump();
      list.push_back(parse_settings('}'));
      bump();
      while (cur_.kind == Tok::ellipsis) bump();
      if (is_punct(',')) {
        bump();
      } else if (!is_punct(')')) {
        fail("expected ',' or ')' in list, found '" + describe(cur_) + "'");
      }
    }
  }

  Lexer lexer_;
  Token cur_;
};

// ---------------------------------------------------------------------------
// Serializer
// ---------------------------------------------------------------------------

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

void write_group(std::ostringstream& os, const ConfigGroup& g, int depth);

void write_value(std::ostringstream& os, const ConfigNode& node, int depth) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  if (auto i = std::get_if<std::int64_t>(&node.value)) {
    os << *i;
  } else if (auto s = std::get_if<std::string>(&node.value)) {
    os << quote(*s);
  } else if (auto g = std::get_if<ConfigGroup>(&node.value)) {
    os << "{\n";
    write_group(os, *g, depth + 1);
    os << pad << "}";
  } else {
    const auto& list = std::get<ConfigList>(node.value);
    os << "(";
    for (std::size_t i = 0; i < list.size(); ++i) {
      os << (i == 0 ? "\n" : ",\n") << pad << "  {\n";
      write_group(os, list[i], depth + 2);
      os << pad << "  }";
    }
    os << (list.empty() ? ")" : "\n" + pad + ")");
  }
}

void write_group(std::ostringstream& os, const ConfigGroup& g, int depth) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  for (const auto& e : g.entries) {
    os << pad << e.name << " = ";
    write_value(os, e.node, depth);
    os << ";\n";
  }
}

}  // namespace

ConfigTree parse_config(std::string_view text) { return Parser(text).parse_document(); }

std::string serialize_config(const ConfigTree& tree) {
  std::ostringstream os;
  write_group(os, tree, 0);
  return os.str();
}

// ---------------------------------------------------------------------------
// Enum names
// ---------------------------------------------------------------------------

std::string_view to_string(OperationMode m) {
  switch (m) {
    case OperationMode::standalone: return "standalone";
    case OperationMode::inband: return "inband";
    case OperationMode::guardband: return "guardband";
  }
  return "?";
}

std::string_view to_string(SubcarrierSpacing s) { return s == SubcarrierSpacing::khz15 ? "15kHz" : "3.75kHz"; }

std::string_view to_string(Msg3RangeStart r) {
  switch (r) {
    case Msg3RangeStart::zero: return "zero";
    case Msg3RangeStart::one_third: return "oneThird";
    case Msg3RangeStart::two_third: return "twoThird";
    case Msg3RangeStart::one: return "one";
  }
  return "?";
}

std::string_view to_string(CssOffset o) {
  switch (o) {
    case CssOffset::zero: return "zero";
    case CssOffset::one_eighth: return "oneEighth";
    case CssOffset::one_fourth: return "oneFourth";
    case CssOffset::three_eighth: return "threeEighth";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Typed configuration
// ---------------------------------------------------------------------------

int RachCeConfig::msg3_first_subcarrier() const {
  const int n = nprach.num_subcarriers;
  switch (msg3_range_start) {
    case Msg3RangeStart::zero: return nprach.subcarrier_offset;
    case Msg3RangeStart::one_third: return nprach.subcarrier_offset + n / 3;
    case Msg3RangeStart::two_third: return nprach.subcarrier_offset + 2 * n / 3;
    case Msg3RangeStart::one: return nprach.subcarrier_offset + n;
  }
  return nprach.subcarrier_offset;
}

int RachCeConfig::preamble_duration_sf() const {
  // 4 symbol groups of 1.4 ms each per repetition.
  return (repetitions_per_attempt * 28 + 4) / 5;
}

int NpdcchCssConfig::period() const {
  const int doubled = r_max * start_sf_g_halves;
  if (doubled % 2 != 0) {
    throw ConfigError("NPDCCH CSS period r_max * G = " + std::to_string(r_max) + " * " +
                      std::to_string(start_sf_g_halves / 2) + ".5 is not an integer");
  }
  return doubled / 2;
}

int NpdcchCssConfig::offset_sf() const {
  const int eighths = static_cast<int>(offset);
  return period() * eighths / 8;
}

std::string NetworkConfig::enb_ipv4() const {
  auto slash = enb_s1_mme_ipv4_cidr.find('/');
  return enb_s1_mme_ipv4_cidr.substr(0, slash);
}

namespace {

bool is_power_of_two(std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

bool is_dotted_quad(std::string_view s) {
  int parts = 0;
  std::size_t i = 0;
  while (i <= s.size()) {
    std::size_t j = s.find('.', i);
    if (j == std::string_view::npos) j = s.size();
    auto part = s.substr(i, j - i);
    if (part.empty() || part.size() > 3) return false;
    int v = 0;
    for (char c : part) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
      v = v * 10 + (c - '0');
    }
    if (v > 255) return false;
    ++parts;
    i = j + 1;
    if (j == s.size()) break;
  }
  return parts == 4;
}

bool is_ipv4_cidr(std::string_view s) {
  auto slash = s.find('/');
  if (slash == std::string_view::npos) return is_dotted_quad(s);
  auto bits = s.substr(slash + 1);
  if (bits.empty() || bits.size() > 2) return false;
  int v = 0;
  for (char c : bits) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    v = v * 10 + (c - '0');
  }
  return v <= 32 && is_dotted_quad(s.substr(0, slash));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

/// Key lookup across an ordered list of scopes (innermost first).
class Scopes {
 public:
  explicit Scopes(std::vector<const ConfigGroup*> scopes) : scopes_(std::move(scopes)) {}

  const ConfigNode* find(std::string_view key) const {
    for (const auto* g : scopes_) {
      if (const auto* n = g->find(key)) return n;
    }
    return nullptr;
  }

  std::optional<std::int64_t> integer(std::string_view key) const {
    const auto* n = find(key);
    if (n == nullptr) return std::nullopt;
    if (const auto* i = std::get_if<std::int64_t>(&n->value)) return *i;
    throw ConfigError("setting '" + std::string(key) + "' must be an integer");
  }

  std::optional<std::string> string(std::string_view key) const {
    const auto* n = find(key);
    if (n == nullptr) return std::nullopt;
    if (const auto* s = std::get_if<std::string>(&n->value)) return *s;
    throw ConfigError("setting '" + std::string(key) + "' must be a string");
  }

  std::optional<bool> boolean(std::string_view key) const {
    auto s = string(key);
    if (!s) return std::nullopt;
    auto v = lower(*s);
    if (v == "yes" || v == "true" || v == "on" || v == "enable") return true;
    if (v == "no" || v == "false" || v == "off" || v == "disable") return false;
    throw ConfigError("setting '" + std::string(key) + "' must be yes/no, got \"" + *s + "\"");
  }

 private:
  std::vector<const ConfigGroup*> scopes_;
};

const ConfigGroup* first_group_of_list(const ConfigGroup& scope, std::string_view key) {
  const auto* n = scope.find(key);
  if (n == nullptr) return nullptr;
  const auto* list = std::get_if<ConfigList>(&n->value);
  if (list == nullptr) throw ConfigError("setting '" + std::string(key) + "' must be a list of groups");
  return list->empty() ? nullptr : &list->front();
}

int require_int_in(std::string_view key, std::int64_t v, std::initializer_list<std::int64_t> allowed) {
  if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
    std::string set;
    for (auto a : allowed) set += (set.empty() ? "" : ",") + std::to_string(a);
    throw ConfigError("setting '" + std::string(key) + "' = " + std::to_string(v) + " not in {" + set + "}");
  }
  return static_cast<int>(v);
}

int require_range(std::string_view key, std::int64_t v, std::int64_t lo, std::int64_t hi) {
  if (v < lo || v > hi) {
    throw ConfigError("setting '" + std::string(key) + "' = " + std::to_string(v) + " outside [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return static_cast<int>(v);
}

int require_pow2(std::string_view key, std::int64_t v, std::int64_t max) {
  if (!is_power_of_two(v) || v > max) {
    throw ConfigError("setting '" + std::string(key) + "' = " + std::to_string(v) +
                      " must be a power of two <= " + std::to_string(max));
  }
  return static_cast<int>(v);
}

Msg3RangeStart parse_msg3_range(const std::string& key, const std::string& v) {
  if (v == "zero") return Msg3RangeStart::zero;
  if (v == "oneThird") return Msg3RangeStart::one_third;
  if (v == "twoThird") return Msg3RangeStart::two_third;
  if (v == "one") return Msg3RangeStart::one;
  throw ConfigError("setting '" + key + "' = \"" + v + "\" not in {zero,oneThird,twoThird,one}");
}

CssOffset parse_css_offset(const std::string& key, const std::string& v) {
  if (v == "zero") return CssOffset::zero;
  if (v == "oneEighth") return CssOffset::one_eighth;
  if (v == "oneFourth") return CssOffset::one_fourth;
  if (v == "threeEighth") return CssOffset::three_eighth;
  throw ConfigError("setting '" + key + "' = \"" + v + "\" not in {zero,oneEighth,oneFourth,threeEighth}");
}

/// Applies every RACH/NPRACH key found in `s` onto `r`.
void apply_rach_keys(const Scopes& s, RachCeConfig& r) {
  if (auto v = s.integer("rach_raResponseWindowSize_NB"))
    r.response_window = require_int_in("rach_raResponseWindowSize_NB", *v, {2, 3, 4, 5, 6, 7, 8, 10});
  if (auto v = s.integer("rach_macContentionResolutionTimer_NB"))
    r.contention_resolution_timer =
        require_int_in("rach_macContentionResolutionTimer_NB", *v, {1, 2, 3, 4, 8, 16, 32, 64});
  if (auto v = s.integer("rach_preambleInitialReceivedTargetPower_NB")) {
    r.preamble_initial_target_power_dbm = require_range("rach_preambleInitialReceivedTargetPower_NB", *v, -120, -90);
    if (*v % 2 != 0) throw ConfigError("setting 'rach_preambleInitialReceivedTargetPower_NB' must be even");
  }
  if (auto v = s.string("nrprach_SubcarrierMSG3_RangeStart"))
    r.msg3_range_start = parse_msg3_range("nrprach_SubcarrierMSG3_RangeStart", *v);
  if (auto v = s.integer("maxNumPreambleAttemptCE_NB"))
    r.max_preamble_attempts = require_range("maxNumPreambleAttemptCE_NB", *v, 1, 10);
  if (auto v = s.integer("numRepetitionsPerPreambleAttempt"))
    r.repetitions_per_attempt = require_pow2("numRepetitionsPerPreambleAttempt", *v, 128);
  if (auto v = s.integer("nprach_Periodicity"))
    r.nprach.periodicity_ms = require_int_in("nprach_Periodicity", *v, {40, 80, 160, 240, 320, 640, 1280, 2560});
  if (auto v = s.integer("nprach_StartTime"))
    r.nprach.start_time_ms = require_int_in("nprach_StartTime", *v, {8, 16, 32, 64, 128, 256, 512, 1024});
  if (auto v = s.integer("nprach_SubcarrierOffset"))
    r.nprach.subcarrier_offset = require_int_in("nprach_SubcarrierOffset", *v, {0, 2, 12, 18, 24, 34, 36});
  if (auto v = s.integer("nprach_NumSubcarriers"))
    r.nprach.num_subcarriers = require_int_in("nprach_NumSubcarriers", *v, {12, 24, 36, 48});
  if (auto v = s.integer("npdsch_NumRepetitions"))
    r.npdsch_repetitions = require_pow2("npdsch_NumRepetitions", *v, 2048);
  if (auto v = s.integer("npusch_NumRepetitions"))
    r.npusch_repetitions = require_pow2("npusch_NumRepetitions", *v, 128);
}

void validate_rach(const std::array<RachCeConfig, kNumCeLevels>& levels) {
  for (int ce = 0; ce < kNumCeLevels; ++ce) {
    const auto& r = levels[static_cast<std::size_t>(ce)];
    const std::string where = "CE level " + std::to_string(ce) + ": ";
    if (r.nprach.subcarrier_offset + r.nprach.num_subcarriers > kNprachSubcarriers) {
      throw ConfigError(where + "NPRACH subcarrier region exceeds 48 subcarriers");
    }
    if (r.nprach.start_time_ms + r.preamble_duration_sf() > r.nprach.periodicity_ms) {
      throw ConfigError(where + "preamble repetitions do not fit in the NPRACH period");
    }
    for (int other = 0; other < ce; ++other) {
      const auto& o = levels[static_cast<std::size_t>(other)].nprach;
      bool disjoint = r.nprach.subcarrier_offset >= o.subcarrier_offset + o.num_subcarriers ||
                      o.subcarrier_offset >= r.nprach.subcarrier_offset + r.nprach.num_subcarriers;
      if (!disjoint) {
        throw ConfigError(where + "NPRACH subcarriers overlap CE level " + std::to_string(other));
      }
    }
  }
}

}  // namespace

EnbConfig extract_enb_config(const ConfigTree& tree) {
  EnbConfig cfg;

  const ConfigGroup* scope = first_group_of_list(tree, "eNBs");
  if (scope == nullptr) scope = &tree;
  const ConfigGroup* carrier = first_group_of_list(*scope, "component_carriers");

  std::vector<const ConfigGroup*> chain;
  if (carrier != nullptr) chain.push_back(carrier);
  chain.push_back(scope);
  if (scope != &tree) chain.push_back(&tree);
  const Scopes keys(chain);

  // Identity
  if (auto v = keys.integer("eNB_ID")) cfg.enb_id = static_cast<std::uint32_t>(require_range("eNB_ID", *v, 0, 0xfffff));
  if (auto v = keys.string("eNB_name")) cfg.enb_name = *v;
  {
    auto mcc = keys.string("mobile_country_code");
    auto mnc = keys.string("mobile_network_code");
    if (mcc && mnc) cfg.plmn = *mcc + *mnc;
  }

  // Cell
  auto band = keys.integer("eutra_band");
  if (!band) throw ConfigError("missing mandatory setting 'eutra_band'");
  cfg.cell.eutra_band = require_range("eutra_band", *band, 1, 255);
  auto dl = keys.integer("downlink_frequency");
  if (!dl) throw ConfigError("missing mandatory setting 'downlink_frequency'");
  if (*dl <= 0) throw ConfigError("setting 'downlink_frequency' must be positive");
  cfg.cell.downlink_frequency_hz = *dl;
  if (auto v = keys.integer("uplink_frequency_offset")) {
    cfg.cell.uplink_frequency_offset_hz = *v;
  } else {
    cfg.cell.uplink_frequency_offset_hz = band_duplex_offset_hz(cfg.cell.eutra_band);
  }
  if (cfg.cell.uplink_frequency_hz() <= 0) {
    throw ConfigError("uplink frequency (downlink_frequency + uplink_frequency_offset) must be positive");
  }
  if (auto v = keys.string("nbiot_operation_mode")) {
    auto m = lower(*v);
    if (m == "standalone" || m == "stand-alone") cfg.cell.operation_mode = OperationMode::standalone;
    else if (m == "inband" || m == "in-band") cfg.cell.operation_mode = OperationMode::inband;
    else if (m == "guardband" || m == "guard-band") cfg.cell.operation_mode = OperationMode::guardband;
    else throw ConfigError("setting 'nbiot_operation_mode' = \"" + *v + "\" not in {standalone,inband,guardband}");
  }
  if (auto v = keys.string("nbiot_subcarrier_spacing")) {
    if (*v == "15kHz") cfg.cell.subcarrier_spacing = SubcarrierSpacing::khz15;
    else if (*v == "3.75kHz") cfg.cell.subcarrier_spacing = SubcarrierSpacing::khz3_75;
    else throw ConfigError("setting 'nbiot_subcarrier_spacing' = \"" + *v + "\" not in {15kHz,3.75kHz}");
  }
  if (auto v = keys.boolean("nbiot_scrambling")) cfg.cell.scrambling = *v;

  // RACH: per-level defaults first; replicated scalars and per-level groups override them.
  constexpr std::array<int, kNumCeLevels> kPeriod{80, 160, 320};
  constexpr std::array<int, kNumCeLevels> kOffset{0, 12, 24};
  constexpr std::array<int, kNumCeLevels> kReps{1, 2, 4};
  for (std::size_t ce = 0; ce < kNumCeLevels; ++ce) {
    auto& r = cfg.rach[ce];
    r.nprach.periodicity_ms = kPeriod[ce];
    r.nprach.subcarrier_offset = kOffset[ce];
    r.npdsch_repetitions = kReps[ce];
    r.npusch_repetitions = kReps[ce];
    apply_rach_keys(keys, r);
  }
  for (const auto* holder : chain) {
    const auto* n = holder->find("rach_ce_levels");
    if (n == nullptr) continue;
    const auto* list = std::get_if<ConfigList>(&n->value);
    if (list == nullptr) throw ConfigError("setting 'rach_ce_levels' must be a list of groups");
    if (list->size() > kNumCeLevels) throw ConfigError("setting 'rach_ce_levels' has more than 3 CE levels");
    for (std::size_t ce = 0; ce < list->size(); ++ce) apply_rach_keys(Scopes({&(*list)[ce]}), cfg.rach[ce]);
    break;
  }
  validate_rach(cfg.rach);

  // NPDCCH CSS for RA
  if (auto v = keys.integer("npdcch_NumRepetitions_RA")) cfg.css.r_max = require_pow2("npdcch_NumRepetitions_RA", *v, 2048);
  if (const auto* g = keys.find("npdcch_StartSF_CSS_RA")) {
    if (const auto* i = std::get_if<std::int64_t>(&g->value)) {
      cfg.css.start_sf_g_halves = 2 * require_int_in("npdcch_StartSF_CSS_RA", *i, {2, 4, 8, 16, 32, 48, 64});
    } else if (const auto* s = std::get_if<std::string>(&g->value); s && (*s == "1.5" || *s == "v1dot5")) {
      cfg.css.start_sf_g_halves = 3;
    } else {
      throw ConfigError("setting 'npdcch_StartSF_CSS_RA' must be one of 1.5, 2, 4, 8, 16, 32, 48, 64");
    }
  }
  if (auto v = keys.string("npdcch_Offset_RA")) cfg.css.offset = parse_css_offset("npdcch_Offset_RA", *v);
  (void)cfg.css.period();  // rejects non-integer T

  // Network
  const ConfigGroup* mme = first_group_of_list(*scope, "mme_ip_address");
  if (mme == nullptr && scope != &tree) mme = first_group_of_list(tree, "mme_ip_address");
  std::optional<std::string> mme_ip;
  if (mme != nullptr) mme_ip = Scopes({mme}).string("ipv4");
  if (!mme_ip) throw ConfigError("missing mandatory setting 'mme_ip_address.ipv4'");
  if (!is_dotted_quad(*mme_ip)) throw ConfigError("setting 'mme_ip_address.ipv4' = \"" + *mme_ip + "\" is not IPv4");
  cfg.network.mme_ipv4 = *mme_ip;

  const ConfigGroup* netif = nullptr;
  for (const auto* holder : {scope, &tree}) {
    if (const auto* n = holder->find("NETWORK_INTERFACES")) {
      netif = std::get_if<ConfigGroup>(&n->value);
      if (netif == nullptr) throw ConfigError("setting 'NETWORK_INTERFACES' must be a group");
      break;
    }
  }
  ConfigGroup empty;
  const Scopes net({netif != nullptr ? netif : &empty});
  cfg.network.enb_s1_mme_ipv4_cidr = net.string("ENB_IPV4_ADDRESS_FOR_S1_MME").value_or("127.0.0.1/8");
  cfg.network.enb_s1u_ipv4_cidr = net.string("ENB_IPV4_ADDRESS_FOR_S1U").value_or(cfg.network.enb_s1_mme_ipv4_cidr);
  for (const auto* key : {"ENB_IPV4_ADDRESS_FOR_S1_MME", "ENB_IPV4_ADDRESS_FOR_S1U"}) {
    const auto& v = std::string(key) == "ENB_IPV4_ADDRESS_FOR_S1U" ? cfg.network.enb_s1u_ipv4_cidr
                                                                 : cfg.network.enb_s1_mme_ipv4_cidr;
    if (!is_ipv4_cidr(v)) throw ConfigError(std::string("setting '") + key + "' = \"" + v + "\" is not IPv4/CIDR");
  }
  if (auto v = net.integer("ENB_PORT_FOR_S1U")) cfg.network.s1u_port = require_range("ENB_PORT_FOR_S1U", *v, 1, 65535);
  if (cfg.network.enb_s1u_ipv4_cidr != cfg.network.enb_s1_mme_ipv4_cidr) {
    throw ConfigError("control-plane-only core: ENB_IPV4_ADDRESS_FOR_S1U must equal ENB_IPV4_ADDRESS_FOR_S1_MME");
  }

  // Scheduler knobs
  auto& mac = cfg.mac;
  if (auto v = keys.integer("mac_dci_to_data_gap")) mac.dci_to_data_gap = require_range("mac_dci_to_data_gap", *v, 1, 64);
  if (auto v = keys.integer("mac_max_harq_retx")) mac.max_harq_retx = require_range("mac_max_harq_retx", *v, 0, 8);
  if (auto v = keys.integer("mac_msg3_delay")) mac.msg3_delay = require_range("mac_msg3_delay", *v, 1, 64);
  if (auto v = keys.integer("mac_ul_grant_delay")) mac.ul_grant_delay = require_range("mac_ul_grant_delay", *v, 1, 64);
  if (auto v = keys.integer("mac_harq_ack_delay")) mac.harq_ack_delay = require_range("mac_harq_ack_delay", *v, 1, 64);

  return cfg;
}

EnbConfig load_enb_config(std::string_view text) { return extract_enb_config(parse_config(text)); }

// ---------------------------------------------------------------------------
// EARFCN
// ---------------------------------------------------------------------------

namespace {

struct BandEntry {
  std::int64_t dl_low_hz;
  int n_offs_dl;
  int n_max_dl;
  std::int64_t duplex_hz;  // ul - dl
};

const std::map<int, BandEntry>& band_table() {
  static const std::map<int, BandEntry> table{
      {1, {2'110'000'000, 0, 599, -190'000'000}},
      {3, {1'805'000'000, 1200, 1949, -95'000'000}},
      {5, {869'000'000, 2400, 2649, -45'000'000}},
      {8, {925'000'000, 3450, 3799, -45'000'000}},
      {20, {791'000'000, 6150, 6449, 41'000'000}},
      {28, {758'000'000, 9210, 9659, -55'000'000}},
  };
  return table;
}

/// Field-observed (band, EARFCN) -> DL centre overrides.
const std::map<std::pair<int, int>, std::int64_t>& field_overrides() {
  static const std::map<std::pair<int, int>, std::int64_t> table{{{28, 9448}, 780'000'000}};
  return table;
}

}  // namespace

std::int64_t band_duplex_offset_hz(int band) {
  auto it = band_table().find(band);
  if (it == band_table().end()) throw ConfigError("unknown E-UTRA band " + std::to_string(band));
  return it->second.duplex_hz;
}

Carrier earfcn_to_carrier(int band, int earfcn, EarfcnMapping mapping, std::optional<std::int64_t> uplink_offset_hz) {
  auto it = band_table().find(band);
  if (it == band_table().end()) throw ConfigError("unknown E-UTRA band " + std::to_string(band));
  const BandEntry& b = it->second;
  const std::int64_t offset = uplink_offset_hz.value_or(b.duplex_hz);

  if (earfcn < b.n_offs_dl || earfcn > b.n_max_dl) {
    throw ConfigError("EARFCN " + std::to_string(earfcn) + " outside band " + std::to_string(band) + " [" +
                      std::to_string(b.n_offs_dl) + ", " + std::to_string(b.n_max_dl) + "]");
  }
  std::int64_t dl = b.dl_low_hz + 100'000LL * (earfcn - b.n_offs_dl);
  if (mapping == EarfcnMapping::field_observed) {
    if (auto o = field_overrides().find({band, earfcn}); o != field_overrides().end()) dl = o->second;
  }
  return Carrier{dl, dl + offset};
}

}  // namespace nbsim::config
