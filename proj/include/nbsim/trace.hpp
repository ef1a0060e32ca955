#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nbsim/clock.hpp"
#include "nbsim/error.hpp"

namespace nbsim {

/// The first five tags are the UE Logviewer filter conditions. S1AP records
/// S1 messages as seen on the wire, WARN protocol anomalies, and S1U exists
/// only so that its absence can be checked (the core is control-plane only).
enum class TraceTag : std::uint8_t { rrc_debug_asn, nas_dbg_nas_msg, dci, harq, rach, s1ap, s1u, warn };

inline constexpr std::size_t kNumTraceTags = 8;

/// Emission order within one subframe: PHY, eNB MAC, eNB RRC/S1AP, MME, UE.
enum class Component : std::uint8_t { phy = 0, mac = 1, rrc = 2, mme = 3, ue = 4 };

std::string_view to_string(TraceTag tag);
std::string_view to_string(Component c);
std::optional<TraceTag> parse_tag(std::string_view name);
std::optional<Component> parse_component(std::string_view name);

struct TraceEvent {
  AbsSf abs_sf = 0;
  TraceTag tag = TraceTag::warn;
  Component source = Component::phy;
  std::uint32_t entity = 0;
  std::string detail;

  bool operator==(const TraceEvent&) const = default;
};

/// `[<abs_sf>] <TAG> <component>/<entity> <detail>`
std::string format_event(const TraceEvent& e);
std::optional<TraceEvent> parse_event(std::string_view line);

/// Order-preserving subset of events whose tag is in `tags`.
std::vector<TraceEvent> filter_trace(std::span<const TraceEvent> events, const std::set<TraceTag>& tags);

/// Parses "RACH,HARQ". Throws Error listing the valid tags on an unknown name.
std::set<TraceTag> parse_tag_list(std::string_view csv);

std::set<TraceTag> all_tags();

/// Append-only event log shared by the components of one run.
class Trace {
 public:
  void emit(AbsSf abs_sf, TraceTag tag, Component source, std::uint32_t entity, std::string detail) {
    events_.push_back(TraceEvent{abs_sf, tag, source, entity, std::move(detail)});
  }
  void append(TraceEvent e) { events_.push_back(std::move(e)); }

  /// Stable sort by (abs_sf, component, entity); emission order breaks ties.
  void finalize();

  const std::vector<TraceEvent>& events() const noexcept { return events_; }
  std::size_t count(TraceTag tag) const;

 private:
  std::vector<TraceEvent> events_;
};

/// Bound (component, entity) emitter.
class Tracer {
 public:
  Tracer() = default;
  Tracer(Trace* trace, Component source, std::uint32_t entity) : trace_(trace), source_(source), entity_(entity) {}

  void operator()(AbsSf now, TraceTag tag, std::string detail) const {
    if (trace_ != nullptr) trace_->emit(now, tag, source_, entity_, std::move(detail));
  }
  Tracer with_entity(std::uint32_t entity) const { return Tracer(trace_, source_, entity); }

 private:
  Trace* trace_ = nullptr;
  Component source_ = Component::phy;
  std::uint32_t entity_ = 0;
};

}  // namespace nbsim
