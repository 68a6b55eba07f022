#include "coex/corruption.hpp"

#include <algorithm>
#include <string>

namespace coex {

CorruptionMask::CorruptionMask(std::vector<bool> bits) : bits_(std::move(bits)) {
  error_count_ = static_cast<int>(std::count(bits_.begin(), bits_.end(), true));
}

void CorruptionMask::set(int i) {
  auto ref = bits_.at(static_cast<std::size_t>(i));
  if (!ref) {
    ref = true;
    ++error_count_;
  }
}

TimeWindow corrupting_window(const Frame& interferer) {
  TimeWindow w{interferer.start_us, interferer.end_us()};
  if (interferer.technology == Technology::Zigbee) {
    w.begin += airtime_us(kZigbeePhyHeaderBytes, interferer.bitrate_bps);
  }
  // CCK payload symbols barely register on a ZigBee receiver; the 1 Mbps
  // DSSS preamble and PLCP header in front of them do.
  if (interferer.technology == Technology::Wifi && interferer.kind == FrameKind::Data) {
    w.end = std::min(w.end, w.begin + kWifiPlcpUs);
  }
  return w;
}

CorruptionMask window_mask(const Frame& victim, TimeWindow window, double p_corrupt, Rng& rng) {
  CorruptionMask mask(victim.length_bytes);
  const Micros lo = std::max(window.begin, victim.start_us);
  const Micros hi = std::min(window.end, victim.end_us());
  if (hi <= lo || p_corrupt <= 0.0) return mask;
  const int first = static_cast<int>((lo - victim.start_us) / kZigbeeByteUs);
  const int last = static_cast<int>((hi - 1 - victim.start_us) / kZigbeeByteUs);
  for (int i = first; i <= last && i < victim.length_bytes; ++i) {
    if (rng.bernoulli(p_corrupt)) mask.set(i);
  }
  return mask;
}

CorruptionMask collision_mask(const Frame& victim, const Frame& interferer, double p_corrupt,
                              Rng& rng) {
  return window_mask(victim, corrupting_window(interferer), p_corrupt, rng);
}

void WeakLinkParams::validate() const {
  if (!(p_symbol >= 0.0 && p_symbol < 1.0)) {
    throw std::invalid_argument("weak link p_symbol must be in [0,1)");
  }
  if (!(burst_continue >= 0.0 && burst_continue < 1.0)) {
    throw std::invalid_argument("weak link burst_continue must be in [0,1)");
  }
  if (!(sync_loss >= 0.0 && sync_loss < 1.0)) {
    throw std::invalid_argument("weak link sync_loss must be in [0,1)");
  }
}

CorruptionMask weak_link_mask(int length_bytes, const WeakLinkParams& params, Rng& rng) {
  params.validate();
  CorruptionMask mask(length_bytes);
  if (params.p_symbol <= 0.0) return mask;
  const double p_enter = params.p_byte();
  bool corrupt = false;
  for (int i = 0; i < length_bytes; ++i) {
    corrupt = rng.bernoulli(corrupt ? params.burst_continue : p_enter);
    if (corrupt) mask.set(i);
  }
  return mask;
}

CorruptionMask merge(std::span<const CorruptionMask> masks) {
  if (masks.empty()) return {};
  const int n = masks.front().length();
  std::vector<bool> bits(static_cast<std::size_t>(n), false);
  for (const auto& m : masks) {
    if (m.length() != n) {
      throw MaskLengthError("cannot merge masks of length " + std::to_string(n) + " and " +
                            std::to_string(m.length()));
    }
    for (int i = 0; i < n; ++i) {
      if (m.test(i)) bits[static_cast<std::size_t>(i)] = true;
    }
  }
  return CorruptionMask(std::move(bits));
}

bool header_hit(const CorruptionMask& mask) {
  const int n = std::min(mask.length(), kHeaderRegionBytes);
  for (int i = 0; i < n; ++i) {
    if (mask.test(i)) return true;
  }
  return false;
}

}  // namespace coex
