#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace nbsim {

/// Count of 1 ms subframes since simulation start.
using AbsSf = std::uint64_t;

inline constexpr AbsSf kSubframesPerFrame = 10;
inline constexpr AbsSf kFramesPerHyperframe = 1024;
inline constexpr AbsSf kHyperframes = 1024;
inline constexpr AbsSf kSubframesPerHyperframe = kSubframesPerFrame * kFramesPerHyperframe;
inline constexpr AbsSf kHyperCycle = kSubframesPerHyperframe * kHyperframes;

/// (hyperframe, system frame, subframe); ordering is lexicographic.
struct SubframeClock {
  std::uint16_t hfn = 0;  // 0..1023
  std::uint16_t sfn = 0;  // 0..1023
  std::uint8_t sf = 0;    // 0..9

  auto operator<=>(const SubframeClock&) const = default;
  bool valid() const noexcept { return hfn < 1024 && sfn < 1024 && sf < 10; }
};

constexpr SubframeClock advance(SubframeClock c) noexcept {
  if (++c.sf < kSubframesPerFrame) return c;
  c.sf = 0;
  if (++c.sfn < kFramesPerHyperframe) return c;
  c.sfn = 0;
  c.hfn = static_cast<std::uint16_t>((c.hfn + 1) % kHyperframes);
  return c;
}

constexpr AbsSf to_abs(SubframeClock c) noexcept {
  return (AbsSf{c.hfn} * kFramesPerHyperframe + c.sfn) * kSubframesPerFrame + c.sf;
}

/// Inverse of to_abs modulo one hyper-cycle (10 * 1024 * 1024 subframes).
constexpr SubframeClock from_abs(AbsSf abs) noexcept {
  abs %= kHyperCycle;
  return SubframeClock{static_cast<std::uint16_t>(abs / kSubframesPerHyperframe),
                       static_cast<std::uint16_t>(abs / kSubframesPerFrame % kFramesPerHyperframe),
                       static_cast<std::uint8_t>(abs % kSubframesPerFrame)};
}

/// Latest absolute subframe <= `reference` whose (sfn, sf) matches.
constexpr AbsSf resolve_sfn_sf(AbsSf reference, std::uint16_t sfn, std::uint8_t sf) noexcept {
  const AbsSf within = AbsSf{sfn} * kSubframesPerFrame + sf;
  const AbsSf ref_within = reference % kSubframesPerHyperframe;
  const AbsSf base = reference - ref_within;
  if (within <= ref_within) return base + within;
  return base >= kSubframesPerHyperframe ? base - kSubframesPerHyperframe + within : within;
}

inline std::string to_string(SubframeClock c) {
  return "(" + std::to_string(c.hfn) + "," + std::to_string(c.sfn) + "," + std::to_string(c.sf) + ")";
}

}  // namespace nbsim
