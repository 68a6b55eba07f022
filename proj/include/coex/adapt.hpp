#pragma once

#include <string>
#include <vector>

#include "coex/fim.hpp"
#include "coex/spectrum.hpp"
#include "coex/traffic.hpp"

namespace coex {

enum class ActionKind { None, SwapChannel, ReducePacketLength, EnableRedundancy, EnableRtsCts };
std::string to_string(ActionKind k);

struct Action {
  ActionKind kind = ActionKind::None;
  int value = 0;  // target channel or new length
  std::string describe() const;
  friend bool operator==(const Action&, const Action&) = default;
};

/// The part of the running scenario that countermeasures can change.
struct LinkState {
  int victim_channel = 11;
  int victim_length_bytes = kZigbeeDefaultLength;
  std::vector<int> wifi_channels;  // known WiFi interferer channels
  bool redundancy = false;
  bool rts_cts = false;
  int reduced_length_bytes = 64;

  friend bool operator==(const LinkState&, const LinkState&) = default;
};

/// First ZigBee channel whose band is disjoint from every WiFi channel, or 0.
int first_overlap_free_channel(const std::vector<int>& wifi_channels, int exclude = 0);

struct PolicyResult {
  Action action;
  std::string warning;  // set when a countermeasure was wanted but impossible
};

PolicyResult policy(const fim::Classification& classification, const LinkState& state);

/// Pure state transition. Returns the state unchanged for None.
LinkState apply(const Action& action, LinkState state);

struct SimTrace;

struct LinkStats {
  Micros bin_us = 1'000'000;
  std::vector<std::int64_t> timeline;  // clean receptions per bin
  std::int64_t matched_collisions = 0;
  Micros detection_time_us = -1;  // first non-None action, -1 if none
  std::int64_t detection_collisions = -1;
  double pre_action_pps = 0.0;
  double post_action_pps = 0.0;
  /// (post - pre) / pre; NaN without an action.
  double gain = 0.0;
};

LinkStats measure(const SimTrace& trace, Micros bin_us = 1'000'000);

/// Same as measure() from raw clean-reception times and the first action.
LinkStats measure(const std::vector<Micros>& clean_times, Micros duration_us,
                  Micros detection_time_us, std::int64_t detection_collisions,
                  std::int64_t matched_collisions, Micros bin_us = 1'000'000);

}  // namespace coex
