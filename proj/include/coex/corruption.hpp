#pragma once

#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "coex/rng.hpp"
#include "coex/traffic.hpp"

namespace coex {

/// Bytes 0..4 are the SHR, byte 5 the PHY length field.
inline constexpr int kHeaderRegionBytes = 6;

class CorruptionMask {
 public:
  CorruptionMask() = default;
  explicit CorruptionMask(int length_bytes)
      : bits_(static_cast<std::size_t>(length_bytes), false) {}
  explicit CorruptionMask(std::vector<bool> bits);

  int length() const { return static_cast<int>(bits_.size()); }
  int error_count() const { return error_count_; }
  bool test(int i) const { return bits_.at(static_cast<std::size_t>(i)); }
  void set(int i);
  const std::vector<bool>& bits() const { return bits_; }

  friend bool operator==(const CorruptionMask&, const CorruptionMask&) = default;

 private:
  std::vector<bool> bits_;
  int error_count_ = 0;
};

class MaskLengthError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct TimeWindow {
  Micros begin = 0;
  Micros end = 0;  // exclusive
  bool empty() const { return end <= begin; }
};

/// Span of an interfering frame able to flip victim bytes. ZigBee interferers
/// lose their 5-byte PHY header at the head, WiFi data frames only hit during the
/// PLCP preamble, everything else uses full airtime.
TimeWindow corrupting_window(const Frame& interferer);

/// Marks each victim byte whose 32 us interval intersects the interferer's
/// corrupting window with probability p_corrupt. One coin per intersecting
/// byte, drawn in byte order.
CorruptionMask collision_mask(const Frame& victim, const Frame& interferer, double p_corrupt,
                              Rng& rng);

/// Same as collision_mask but against an explicit window.
CorruptionMask window_mask(const Frame& victim, TimeWindow window, double p_corrupt, Rng& rng);

struct WeakLinkParams {
  double p_symbol = 0.004;
  double burst_continue = 0.25;
  double sync_loss = 0.0;  // per-frame chance the receiver never locks on

  /// Per-byte corruption probability from the clean state (two symbols per byte).
  double p_byte() const { return 1.0 - (1.0 - p_symbol) * (1.0 - p_symbol); }
  void validate() const;
};

/// Two-state (clean / corrupt) chain over the bytes of a frame.
CorruptionMask weak_link_mask(int length_bytes, const WeakLinkParams& params, Rng& rng);

CorruptionMask merge(std::span<const CorruptionMask> masks);

bool header_hit(const CorruptionMask& mask);

}  // namespace coex
