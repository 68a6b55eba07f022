#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coex/adapt.hpp"
#include "coex/corruption.hpp"
#include "coex/fim.hpp"
#include "coex/spectrum.hpp"
#include "coex/traffic.hpp"

namespace coex {

struct InterfererSpec {
  std::string name;
  Technology technology = Technology::Zigbee;
  int channel = 11;  // ZigBee / WiFi channel; ignored for Bluetooth
  StreamConfig zigbee;
  WifiStreamConfig wifi;
  BluetoothStreamConfig bluetooth;
};

/// Carrier-sense rules per technology pair.
struct CcaFlags {
  bool zigbee_cca_enabled = false;
  /// Probability that one WiFi CCA notices an ongoing ZigBee frame; 0 means never.
  /// Basic-rate control frames (beacons) never defer to ZigBee.
  double wifi_senses_zigbee = 0.0;
  bool wifi_senses_wifi = true;
  bool bluetooth_senses_any = false;
  /// Busy CCAs tolerated by a ZigBee sender before it transmits regardless.
  int max_cca_deferrals = 4;
  Micros backoff_max_us = 2560;
};

struct ArqParams {
  bool enabled = false;
  Micros timeout_us = 10'000;
  int max_attempts = 8;
};

struct AdaptParams {
  bool enabled = false;
  int reduced_length_bytes = 64;
};

struct FimParams {
  std::size_t queue_capacity = 16;
  fim::ClassifyParams classify;
};

struct ScenarioConfig {
  std::string name = "scenario";
  int victim_channel = 11;
  StreamConfig victim;
  std::vector<InterfererSpec> interferers;
  std::optional<WeakLinkParams> weak_link;
  CcaFlags cca;
  ArqParams arq;
  FimParams fim;
  AdaptParams adapt;
  IntensityTable intensity = IntensityTable::defaults();
  /// WiFi data frames shorter than this leave no byte errors on the victim.
  int wifi_data_min_effective_length = 1050;
  Micros duration_us = 10'000'000;
  std::uint64_t seed = 1;

  /// Throws ConfigError describing the first inconsistency.
  void validate() const;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Outcome { Dropped, Corrupted, Clean };
std::string to_string(Outcome o);
Outcome outcome_from_string(const std::string& s);

/// Bits of ReceptionEvent::causes.
enum CauseBits : unsigned {
  kCauseZigbee = 1u << 0,
  kCauseWifi = 1u << 1,
  kCauseBluetooth = 1u << 2,
  kCauseWeakLink = 1u << 3,
};

struct ReceptionEvent {
  Micros time_us = 0;  // end of the victim frame
  Micros start_us = 0;
  int stream_id = 0;
  std::uint16_t seq = 0;
  int attempt = 1;
  int channel = 11;
  int length_bytes = 0;
  Outcome outcome = Outcome::Clean;
  int error_count = 0;
  unsigned causes = 0;  // sources that set at least one byte
};

struct ActionRecord {
  Micros time_us = 0;
  Action action;
  std::string verdict;
  std::int64_t matched_collisions = 0;  // cumulative at the action
};

struct ClassificationRecord {
  Micros time_us = 0;
  std::string verdict;
  std::string detail;
  std::int64_t sample_count = 0;
};

struct StreamCounters {
  std::int64_t sent = 0;
  std::int64_t dropped = 0;
  std::int64_t corrupted = 0;
  std::int64_t clean = 0;
};

struct SimTrace {
  std::vector<ReceptionEvent> events;
  StreamCounters victim;
  std::vector<std::int64_t> interferer_sent;
  std::vector<ActionRecord> actions;
  std::vector<ClassificationRecord> classifications;
  /// Every corrupted-but-received victim frame, as a CRC-disabled receiver sees it.
  fim::ErrorHistogram capture_histogram;
  /// FIM's own histogram at the end of the run (matched copies since last reset).
  fim::ErrorHistogram fim_histogram;
  fim::Classification final_classification;
  std::int64_t matched_collisions = 0;
  Micros duration_us = 0;
  std::vector<std::string> warnings;  // distinct policy warnings, first occurrence order

  /// Line-oriented CSV: time_us,stream_id,seq,outcome,error_count. Adaptation
  /// points appear as rows with outcome "Reset".
  void write_csv(std::ostream& out) const;
};

struct SenseDecision {
  bool transmit_now = true;
  Micros retry_at_us = 0;
};

/// Carrier-sense gate for one transmission attempt.
///
/// `concurrent` are the frames on air at the attempt time. After `deferrals`
/// reaches the cap a ZigBee sender transmits regardless.
SenseDecision carrier_sense_gate(const Frame& sender, std::span<const Frame> concurrent,
                                 const CcaFlags& flags, int deferrals, Micros now_us, Rng& rng,
                                 bool senses_victim_rts = false, int victim_source = 0);

SimTrace run(const ScenarioConfig& scenario);

}  // namespace coex
