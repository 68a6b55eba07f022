#pragma once

#include <cstdint>
#include <vector>

#include "coex/rng.hpp"
#include "coex/spectrum.hpp"

namespace coex {

using Micros = std::int64_t;

inline constexpr int kZigbeeBitrate = 250'000;
inline constexpr Micros kZigbeeByteUs = 32;
inline constexpr int kZigbeeDefaultLength = 122;
inline constexpr int kZigbeePhyHeaderBytes = 5;
inline constexpr int kWifiBasicRate = 2'000'000;
inline constexpr int kWifiDataRate = 11'000'000;
inline constexpr int kWifiDefaultControlLength = 208;
inline constexpr Micros kWifiBeaconIntervalUs = 102'400;
/// Long PLCP preamble + header, sent at 1 Mbps ahead of every data frame.
inline constexpr Micros kWifiPlcpUs = 192;
inline constexpr Micros kBluetoothSlotUs = 625;
inline constexpr int kBluetoothRate = 1'000'000;

enum class FrameKind { Data, Control };

struct Frame {
  Technology technology = Technology::Zigbee;
  int source_id = 0;
  std::uint16_t seq = 0;
  FrameKind kind = FrameKind::Data;
  RadioChannel channel;
  Micros start_us = 0;
  int length_bytes = 0;
  int bitrate_bps = kZigbeeBitrate;
  /// Fixed airtime override; used by Bluetooth slots whose on-air time is
  /// set by the slot structure rather than a byte count.
  Micros airtime_override_us = 0;
  std::vector<std::uint8_t> payload;

  Micros airtime_us() const;
  Micros end_us() const { return start_us + airtime_us(); }
};

/// length * 8 * 1e6 / bitrate, rounded toward +infinity.
Micros airtime_us(int length_bytes, int bitrate_bps);

struct StreamConfig {
  double rate_pps = 33.0;
  int length_bytes = kZigbeeDefaultLength;
  Micros jitter_us = 0;
  Micros phase_us = 0;
  /// Occasional late start: with probability slip_prob a frame is pushed back by slip_us.
  double slip_prob = 0.0;
  Micros slip_us = 0;
  /// When > 0, start times are floored onto this grid (e.g. the 32 us byte clock).
  Micros grid_us = 0;
  std::uint64_t rng_seed = 0;
};

/// Deterministic payload for (seed, source, seq); what the receiver should see.
std::vector<std::uint8_t> make_payload(std::uint64_t seed, int source_id, std::uint16_t seq,
                                       int length_bytes);

/// Periodic ZigBee sender. Start times are phase + k * period + U[-jitter, jitter],
/// clamped so consecutive frames never overlap.
std::vector<Frame> zigbee_stream(const StreamConfig& cfg, const RadioChannel& channel,
                                 Micros duration_us, int source_id = 0,
                                 bool with_payload = false);

struct WifiStreamConfig {
  Micros control_interval_us = kWifiBeaconIntervalUs;
  int control_length_bytes = kWifiDefaultControlLength;
  double data_rate_pps = 0.0;
  int data_length_bytes = 1500;
  Micros phase_us = 0;
};

/// Control frames at basic rate every control_interval; data frames at the
/// data rate, dropped whenever they would overlap a control frame.
std::vector<Frame> wifi_stream(const WifiStreamConfig& cfg, const RadioChannel& channel,
                               Micros duration_us, int source_id = 0);

enum class BluetoothMode { Steady, Establishment };

struct BluetoothStreamConfig {
  BluetoothMode mode = BluetoothMode::Steady;
  int slots_per_packet = 5;
  std::uint64_t rng_seed = 0;
  Micros phase_us = 0;
};

/// On-air time of a packet spanning the given slot count (slot turnaround
/// of 259 us subtracted for multi-slot packets, 366 us packet for single slot).
Micros bluetooth_packet_airtime(int slots_per_packet);

/// FHSS transmitter: one frame per packet, each on a uniformly drawn hop channel.
/// Establishment mode hops every half slot (3200 hops/s) with short ID packets.
std::vector<Frame> bluetooth_stream(const BluetoothStreamConfig& cfg, Micros duration_us,
                                    int source_id = 0);

}  // namespace coex
