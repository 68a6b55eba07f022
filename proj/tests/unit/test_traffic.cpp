#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "coex/traffic.hpp"

using namespace coex;

TEST_CASE("airtime rounds up") {
  CHECK(airtime_us(122, kZigbeeBitrate) == 3904);
  CHECK(airtime_us(1, kZigbeeBitrate) == 32);
  CHECK(airtime_us(208, kWifiBasicRate) == 832);
  CHECK(airtime_us(1500, kWifiDataRate) == 1091);  // 1090.9
  CHECK(airtime_us(1100, kWifiDataRate) == 800);
  CHECK_THROWS(airtime_us(10, 0));
}

TEST_CASE("periodic zigbee stream") {
  const auto ch = make_channel(Technology::Zigbee, 11);
  StreamConfig cfg;
  cfg.rate_pps = 12.5;
  cfg.length_bytes = 122;
  auto frames = zigbee_stream(cfg, ch, 1'000'000);
  CHECK(frames.size() >= 12);
  CHECK(frames.size() <= 13);
  CHECK(frames[1].start_us - frames[0].start_us == 80'000);

  cfg.rate_pps = 166;
  frames = zigbee_stream(cfg, ch, 1'000'000);
  CHECK(frames.size() == 166);
  for (const auto& f : frames) CHECK(f.airtime_us() == 3904);
}

TEST_CASE("zigbee stream never overlaps itself and stays on grid") {
  const auto ch = make_channel(Technology::Zigbee, 11);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    StreamConfig cfg;
    cfg.rate_pps = 200;
    cfg.length_bytes = 122;
    cfg.jitter_us = 3000;
    cfg.slip_prob = 0.2;
    cfg.slip_us = 1500;
    cfg.grid_us = 32;
    cfg.rng_seed = seed;
    const auto frames = zigbee_stream(cfg, ch, 500'000);
    for (std::size_t i = 1; i < frames.size(); ++i) {
      CHECK(frames[i].start_us >= frames[i - 1].end_us());
      CHECK(frames[i].seq == static_cast<std::uint16_t>(frames[i - 1].seq + 1));
    }
    for (const auto& f : frames) {
      // a clamped start is a previous end, still on the 32 us grid
      CHECK(f.start_us % 32 == 0);
    }
  }
}

TEST_CASE("streams are deterministic per seed") {
  const auto ch = make_channel(Technology::Zigbee, 13);
  StreamConfig cfg;
  cfg.rate_pps = 100;
  cfg.jitter_us = 500;
  cfg.rng_seed = 42;
  const auto a = zigbee_stream(cfg, ch, 2'000'000, 3, true);
  const auto b = zigbee_stream(cfg, ch, 2'000'000, 3, true);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].start_us == b[i].start_us);
    CHECK(a[i].payload == b[i].payload);
  }
  cfg.rng_seed = 43;
  const auto c = zigbee_stream(cfg, ch, 2'000'000, 3, true);
  bool differs = false;
  for (std::size_t i = 0; i < std::min(a.size(), c.size()); ++i) {
    differs |= a[i].start_us != c[i].start_us;
  }
  CHECK(differs);
}

TEST_CASE("invalid stream parameters") {
  const auto ch = make_channel(Technology::Zigbee, 11);
  StreamConfig cfg;
  cfg.rate_pps = 0;
  CHECK_THROWS(zigbee_stream(cfg, ch, 1000));
  cfg.rate_pps = 10;
  cfg.jitter_us = -1;
  CHECK_THROWS(zigbee_stream(cfg, ch, 1000));
}

TEST_CASE("wifi control-only beacons") {
  WifiStreamConfig cfg;
  const auto frames = wifi_stream(cfg, make_channel(Technology::Wifi, 1), 1'024'000);
  CHECK(frames.size() == 10);
  for (const auto& f : frames) {
    CHECK(f.kind == FrameKind::Control);
    CHECK(f.airtime_us() == 832);
  }
}

TEST_CASE("wifi data frames never overlap each other or beacons") {
  WifiStreamConfig cfg;
  cfg.data_rate_pps = 1250;
  cfg.data_length_bytes = 1100;
  const auto frames = wifi_stream(cfg, make_channel(Technology::Wifi, 1), 1'000'000);
  std::int64_t data = 0;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    CHECK(frames[i].start_us >= frames[i - 1].end_us());
  }
  for (const auto& f : frames) data += f.kind == FrameKind::Data;
  // back-to-back is legal: only the slots taken by the 10 beacons are lost
  CHECK(data >= 1250 - 25);
  CHECK(data <= 1250);
}

TEST_CASE("bluetooth slot timing") {
  CHECK(bluetooth_packet_airtime(5) == 2866);
  CHECK(bluetooth_packet_airtime(1) == 366);
  CHECK_THROWS(bluetooth_packet_airtime(2));

  BluetoothStreamConfig one;
  one.slots_per_packet = 1;
  CHECK(bluetooth_stream(one, 1'000'000).size() == 1600);

  BluetoothStreamConfig est;
  est.mode = BluetoothMode::Establishment;
  CHECK(bluetooth_stream(est, 1'000'000).size() == 3200);
}

TEST_CASE("bluetooth hops are uniform over 79 channels") {
  BluetoothStreamConfig cfg;
  cfg.slots_per_packet = 1;
  cfg.rng_seed = 7;
  const auto frames = bluetooth_stream(cfg, 100'000'000);  // 160000 hops
  std::vector<double> counts(kBluetoothChannels, 0.0);
  for (const auto& f : frames) counts[static_cast<std::size_t>(f.channel.index)] += 1.0;
  const double n = static_cast<double>(frames.size());
  const double expect = n / kBluetoothChannels;
  const double sigma = std::sqrt(n * (1.0 / kBluetoothChannels) * (1.0 - 1.0 / kBluetoothChannels));
  for (double c : counts) CHECK(std::abs(c - expect) <= 4.0 * sigma);

  // a 2 MHz ZigBee band covers 2 MHz worth of 1 MHz hop channels
  const auto z = make_channel(Technology::Zigbee, 13);
  double covered = 0;
  for (const auto& f : frames) {
    covered += spectral_overlap(z, f.channel).fraction * z.width_mhz / f.channel.width_mhz;
  }
  CHECK(std::abs(covered / n - 2.0 / 79.0) < 0.05 * 2.0 / 79.0);
}
