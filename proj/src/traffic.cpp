#include "coex/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coex {

Micros airtime_us(int length_bytes, int bitrate_bps) {
  if (bitrate_bps <= 0) throw std::invalid_argument("bitrate must be positive");
  const std::int64_t bits_us = static_cast<std::int64_t>(length_bytes) * 8 * 1'000'000;
  return (bits_us + bitrate_bps - 1) / bitrate_bps;
}

Micros Frame::airtime_us() const {
  if (airtime_override_us > 0) return airtime_override_us;
  return coex::airtime_us(length_bytes, bitrate_bps);
}

std::vector<std::uint8_t> make_payload(std::uint64_t seed, int source_id, std::uint16_t seq,
                                       int length_bytes) {
  Rng rng(derive_seed(seed, "payload",
                      (static_cast<std::uint64_t>(source_id) << 16) | seq));
  std::vector<std::uint8_t> out(static_cast<std::size_t>(std::max(length_bytes, 0)));
  for (auto& b : out) b = static_cast<std::uint8_t>(rng.next_u64() & 0xff);
  return out;
}

namespace {

Micros nominal_start(Micros phase, std::int64_t k, double rate_pps) {
  return phase + static_cast<Micros>(std::llround(static_cast<double>(k) * 1e6 / rate_pps));
}

}  // namespace

std::vector<Frame> zigbee_stream(const StreamConfig& cfg, const RadioChannel& channel,
                                 Micros duration_us, int source_id, bool with_payload) {
  if (!(cfg.rate_pps > 0.0)) throw std::invalid_argument("rate_pps must be positive");
  if (cfg.jitter_us < 0) throw std::invalid_argument("jitter_us must be non-negative");
  if (duration_us <= 0) throw std::invalid_argument("duration must be positive");

  Rng rng(cfg.rng_seed);
  std::vector<Frame> out;
  Micros prev_end = 0;
  std::uint16_t seq = 0;
  for (std::int64_t k = 0;; ++k) {
    const Micros nominal = nominal_start(cfg.phase_us, k, cfg.rate_pps);
    if (nominal >= cfg.phase_us + duration_us) break;
    Micros start = nominal;
    if (cfg.jitter_us > 0) start += rng.uniform_int(-cfg.jitter_us, cfg.jitter_us);
    if (cfg.slip_prob > 0.0 && rng.bernoulli(cfg.slip_prob)) start += cfg.slip_us;
    if (cfg.grid_us > 0) start -= ((start % cfg.grid_us) + cfg.grid_us) % cfg.grid_us;
    start = std::max({start, prev_end, Micros{0}});

    Frame f;
    f.technology = Technology::Zigbee;
    f.source_id = source_id;
    f.seq = seq++;
    f.kind = FrameKind::Data;
    f.channel = channel;
    f.start_us = start;
    f.length_bytes = cfg.length_bytes;
    f.bitrate_bps = kZigbeeBitrate;
    if (with_payload) f.payload = make_payload(cfg.rng_seed, source_id, f.seq, cfg.length_bytes);
    prev_end = f.end_us();
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<Frame> wifi_stream(const WifiStreamConfig& cfg, const RadioChannel& channel,
                               Micros duration_us, int source_id) {
  if (duration_us <= 0) throw std::invalid_argument("duration must be positive");
  if (cfg.data_rate_pps < 0.0) throw std::invalid_argument("data_rate_pps must be >= 0");

  std::vector<Frame> control;
  if (cfg.control_interval_us > 0) {
    for (Micros t = cfg.phase_us; t < cfg.phase_us + duration_us; t += cfg.control_interval_us) {
      Frame f;
      f.technology = Technology::Wifi;
      f.source_id = source_id;
      f.kind = FrameKind::Control;
      f.channel = channel;
      f.start_us = t;
      f.length_bytes = cfg.control_length_bytes;
      f.bitrate_bps = kWifiBasicRate;
      control.push_back(f);
    }
  }

  std::vector<Frame> out;
  std::size_t ci = 0;
  Micros prev_end = 0;
  if (cfg.data_rate_pps > 0.0) {
    const Micros data_air = airtime_us(cfg.data_length_bytes, kWifiDataRate);
    for (std::int64_t k = 0;; ++k) {
      const Micros nominal = nominal_start(cfg.phase_us, k, cfg.data_rate_pps);
      if (nominal >= cfg.phase_us + duration_us) break;
      const Micros start = std::max(nominal, prev_end);
      const Micros next_nominal = nominal_start(cfg.phase_us, k + 1, cfg.data_rate_pps);
      if (start > nominal && start >= next_nominal) continue;  // transmitter backlog
      const Micros end = start + data_air;

      while (ci < control.size() && control[ci].end_us() <= start) {
        out.push_back(control[ci++]);
      }
      const bool blocked = ci < control.size() && control[ci].start_us < end;
      if (blocked) continue;

      Frame f;
      f.technology = Technology::Wifi;
      f.source_id = source_id;
      f.kind = FrameKind::Data;
      f.channel = channel;
      f.start_us = start;
      f.length_bytes = cfg.data_length_bytes;
      f.bitrate_bps = kWifiDataRate;
      prev_end = end;
      out.push_back(std::move(f));
    }
  }
  while (ci < control.size()) out.push_back(control[ci++]);
  std::stable_sort(out.begin(), out.end(),
                   [](const Frame& a, const Frame& b) { return a.start_us < b.start_us; });
  return out;
}

Micros bluetooth_packet_airtime(int slots_per_packet) {
  if (slots_per_packet != 1 && slots_per_packet != 3 && slots_per_packet != 5) {
    throw std::invalid_argument("slots_per_packet must be 1, 3 or 5");
  }
  return slots_per_packet * kBluetoothSlotUs - 259;
}

std::vector<Frame> bluetooth_stream(const BluetoothStreamConfig& cfg, Micros duration_us,
                                    int source_id) {
  if (duration_us <= 0) throw std::invalid_argument("duration must be positive");
  Rng rng(cfg.rng_seed);
  std::vector<Frame> out;

  // Establishment: inquiry/page trains of 68 us ID packets, two hops per slot.
  const bool steady = cfg.mode == BluetoothMode::Steady;
  const int slots = steady ? cfg.slots_per_packet : 1;
  const Micros air = steady ? bluetooth_packet_airtime(slots) : 68;

  for (std::int64_t k = 0;; ++k) {
    // Half slots alternate 312/313 us so that two of them make one 625 us slot.
    const Micros start =
        cfg.phase_us + (steady ? k * slots * kBluetoothSlotUs : (k * kBluetoothSlotUs) / 2);
    if (start >= cfg.phase_us + duration_us) break;
    const int hop = static_cast<int>(rng.uniform_int(0, kBluetoothChannels - 1));
    Frame f;
    f.technology = Technology::Bluetooth;
    f.source_id = source_id;
    f.kind = FrameKind::Data;
    f.channel = make_channel(Technology::Bluetooth, hop);
    f.start_us = start;
    f.length_bytes = static_cast<int>(air * kBluetoothRate / 8'000'000);
    f.bitrate_bps = kBluetoothRate;
    f.airtime_override_us = air;
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace coex
