#include "nbsim/trace.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <tuple>

#include "nbsim/error.hpp"

namespace nbsim {

namespace {

constexpr std::array<std::string_view, kNumTraceTags> kTagNames{
    "RRC_DEBUG_ASN", "NAS_DBG_NAS_MSG", "DCI", "HARQ", "RACH", "S1AP", "S1U", "WARN"};
constexpr std::array<std::string_view, 5> kComponentNames{"phy", "mac", "rrc", "mme", "ue"};

}  // namespace

std::string_view to_string(TraceTag tag) { return kTagNames[static_cast<std::size_t>(tag)]; }
std::string_view to_string(Component c) { return kComponentNames[static_cast<std::size_t>(c)]; }

std::optional<TraceTag> parse_tag(std::string_view name) {
  for (std::size_t i = 0; i < kTagNames.size(); ++i) {
    if (kTagNames[i] == name) return static_cast<TraceTag>(i);
  }
  return std::nullopt;
}

std::optional<Component> parse_component(std::string_view name) {
  for (std::size_t i = 0; i < kComponentNames.size(); ++i) {
    if (kComponentNames[i] == name) return static_cast<Component>(i);
  }
  return std::nullopt;
}

std::set<TraceTag> all_tags() {
  std::set<TraceTag> out;
  for (std::size_t i = 0; i < kNumTraceTags; ++i) out.insert(static_cast<TraceTag>(i));
  return out;
}

std::string format_event(const TraceEvent& e) {
  std::string line = "[" + std::to_string(e.abs_sf) + "] ";
  line += to_string(e.tag);
  line += ' ';
  line += to_string(e.source);
  line += '/';
  line += std::to_string(e.entity);
  if (!e.detail.empty()) {
    line += ' ';
    line += e.detail;
  }
  return line;
}

std::optional<TraceEvent> parse_event(std::string_view line) {
  if (line.empty() || line.front() != '[') return std::nullopt;
  auto close = line.find("] ");
  if (close == std::string_view::npos) return std::nullopt;
  TraceEvent e;
  auto abs = line.substr(1, close - 1);
  if (std::from_chars(abs.data(), abs.data() + abs.size(), e.abs_sf).ec != std::errc{}) return std::nullopt;
  line.remove_prefix(close + 2);

  auto space = line.find(' ');
  auto tag = parse_tag(line.substr(0, space));
  if (!tag) return std::nullopt;
  e.tag = *tag;
  if (space == std::string_view::npos) return std::nullopt;
  line.remove_prefix(space + 1);

  space = line.find(' ');
  auto who = line.substr(0, space);
  auto slash = who.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto comp = parse_component(who.substr(0, slash));
  if (!comp) return std::nullopt;
  e.source = *comp;
  auto ent = who.substr(slash + 1);
  if (std::from_chars(ent.data(), ent.data() + ent.size(), e.entity).ec != std::errc{}) return std::nullopt;
  if (space != std::string_view::npos) e.detail = std::string(line.substr(space + 1));
  return e;
}

std::vector<TraceEvent> filter_trace(std::span<const TraceEvent> events, const std::set<TraceTag>& tags) {
  std::vector<TraceEvent> out;
  std::copy_if(events.begin(), events.end(), std::back_inserter(out),
               [&](const TraceEvent& e) { return tags.count(e.tag) != 0; });
  return out;
}

std::set<TraceTag> parse_tag_list(std::string_view csv) {
  std::set<TraceTag> out;
  while (!csv.empty()) {
    auto comma = csv.find(',');
    auto name = csv.substr(0, comma);
    while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
    while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
    if (!name.empty()) {
      auto tag = parse_tag(name);
      if (!tag) {
        std::string valid;
        for (auto n : kTagNames) valid += (valid.empty() ? "" : ", ") + std::string(n);
        throw Error("unknown trace tag '" + std::string(name) + "'; valid tags: " + valid);
      }
      out.insert(*tag);
    }
    if (comma == std::string_view::npos) break;
    csv.remove_prefix(comma + 1);
  }
  return out;
}

void Trace::finalize() {
  std::stable_sort(events_.begin(), events_.end(), [](const TraceEvent& a, const TraceEvent& b) {
    return std::tie(a.abs_sf, a.source, a.entity) < std::tie(b.abs_sf, b.source, b.entity);
  });
}

std::size_t Trace::count(TraceTag tag) const {
  return static_cast<std::size_t>(
      std::count_if(events_.begin(), events_.end(), [&](const TraceEvent& e) { return e.tag == tag; }));
}

}  // namespace nbsim
