#include "coex/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "coex/engine.hpp"

namespace coex {

std::string to_string(ActionKind k) {
  switch (k) {
    case ActionKind::None: return "None";
    case ActionKind::SwapChannel: return "SwapChannel";
    case ActionKind::ReducePacketLength: return "ReducePacketLength";
    case ActionKind::EnableRedundancy: return "EnableRedundancy";
    case ActionKind::EnableRtsCts: return "EnableRtsCts";
  }
  return "None";
}

std::string Action::describe() const {
  switch (kind) {
    case ActionKind::SwapChannel:
    case ActionKind::ReducePacketLength:
      return to_string(kind) + "(" + std::to_string(value) + ")";
    default:
      return to_string(kind);
  }
}

int first_overlap_free_channel(const std::vector<int>& wifi_channels, int exclude) {
  for (int ch = kZigbeeFirstChannel; ch <= kZigbeeLastChannel; ++ch) {
    if (ch == exclude) continue;
    const auto zb = make_channel(Technology::Zigbee, ch);
    bool clear = true;
    for (int w : wifi_channels) {
      if (spectral_overlap(zb, make_channel(Technology::Wifi, w)).fraction > 0.0) clear = false;
    }
    if (clear) return ch;
  }
  return 0;
}

PolicyResult policy(const fim::Classification& classification, const LinkState& state) {
  using fim::Verdict;
  PolicyResult out;
  switch (classification.verdict) {
    case Verdict::WifiControlData:
    case Verdict::WifiControlOnly: {
      if (state.wifi_channels.empty()) {
        out.warning = "WiFi detected but no WiFi channel is known; no swap";
        break;
      }
      const auto current = make_channel(Technology::Zigbee, state.victim_channel);
      bool exposed = false;
      for (int w : state.wifi_channels) {
        if (spectral_overlap(current, make_channel(Technology::Wifi, w)).fraction > 0.0) {
          exposed = true;
        }
      }
      if (!exposed) break;
      const int target = first_overlap_free_channel(state.wifi_channels, state.victim_channel);
      if (target == 0) {
        out.warning = "no ZigBee channel clear of the WiFi band; no swap";
        break;
      }
      out.action = {ActionKind::SwapChannel, target};
      break;
    }
    case Verdict::Bluetooth:
      if (state.victim_length_bytes > state.reduced_length_bytes) {
        out.action = {ActionKind::ReducePacketLength, state.reduced_length_bytes};
      }
      break;
    case Verdict::WeakLink:
      if (!state.redundancy) out.action = {ActionKind::EnableRedundancy, 0};
      break;
    case Verdict::ZigbeeHidden:
      if (!state.rts_cts) out.action = {ActionKind::EnableRtsCts, 0};
      break;
    case Verdict::GenericCoexistence:
    case Verdict::Unknown:
      break;
  }
  return out;
}

LinkState apply(const Action& action, LinkState state) {
  switch (action.kind) {
    case ActionKind::None: break;
    case ActionKind::SwapChannel: state.victim_channel = action.value; break;
    case ActionKind::ReducePacketLength: state.victim_length_bytes = action.value; break;
    case ActionKind::EnableRedundancy: state.redundancy = true; break;
    case ActionKind::EnableRtsCts: state.rts_cts = true; break;
  }
  return state;
}

LinkStats measure(const SimTrace& trace, Micros bin_us) {
  std::vector<Micros> clean;
  for (const auto& ev : trace.events) {
    if (ev.outcome == Outcome::Clean) clean.push_back(ev.time_us);
  }
  Micros detection = -1;
  std::int64_t collisions = -1;
  for (const auto& a : trace.actions) {
    if (a.action.kind != ActionKind::None) {
      detection = a.time_us;
      collisions = a.matched_collisions;
      break;
    }
  }
  return measure(clean, trace.duration_us, detection, collisions, trace.matched_collisions,
                 bin_us);
}

LinkStats measure(const std::vector<Micros>& clean_times, Micros duration_us,
                  Micros detection_time_us, std::int64_t detection_collisions,
                  std::int64_t matched_collisions, Micros bin_us) {
  LinkStats stats;
  stats.bin_us = bin_us;
  stats.matched_collisions = matched_collisions;
  stats.detection_time_us = detection_time_us;
  stats.detection_collisions = detection_collisions;
  const auto bins = static_cast<std::size_t>((duration_us + bin_us - 1) / bin_us);
  stats.timeline.assign(std::max<std::size_t>(bins, 1), 0);
  for (Micros t : clean_times) {
    auto b = static_cast<std::size_t>(t / bin_us);
    if (b >= stats.timeline.size()) b = stats.timeline.size() - 1;
    ++stats.timeline[b];
  }

  auto mean = [&](std::size_t lo, std::size_t hi) {
    if (hi <= lo) return std::numeric_limits<double>::quiet_NaN();
    const auto sum = std::accumulate(stats.timeline.begin() + static_cast<std::ptrdiff_t>(lo),
                                     stats.timeline.begin() + static_cast<std::ptrdiff_t>(hi),
                                     std::int64_t{0});
    return static_cast<double>(sum) / static_cast<double>(hi - lo);
  };

  // Only complete bins count; the last bin of a run may be partial.
  const std::size_t full = static_cast<std::size_t>(duration_us / bin_us);
  if (stats.detection_time_us < 0) {
    stats.pre_action_pps = mean(0, full);
    stats.post_action_pps = std::numeric_limits<double>::quiet_NaN();
    stats.gain = std::numeric_limits<double>::quiet_NaN();
  } else {
    const auto action_bin = static_cast<std::size_t>(stats.detection_time_us / bin_us);
    stats.pre_action_pps = mean(0, std::min(action_bin, full));
    stats.post_action_pps = mean(std::min(action_bin + 1, full), full);
    stats.gain = (stats.post_action_pps - stats.pre_action_pps) / stats.pre_action_pps;
  }
  return stats;
}

}  // namespace coex
