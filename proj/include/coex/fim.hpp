#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "coex/traffic.hpp"

namespace coex::fim {

/// Error lengths 1..kMaxErrorLength are tracked; 122-byte frames minus the length byte.
inline constexpr int kMaxErrorLength = 121;

struct QueuedPacket {
  int source_id = 0;
  std::uint16_t seq = 0;
  std::vector<std::uint8_t> bytes;
  Micros time_us = 0;
};

/// Bounded FIFO; inserting into a full queue evicts the oldest entry.
class CorruptedPacketQueue {
 public:
  explicit CorruptedPacketQueue(std::size_t capacity = 16);

  void push(QueuedPacket packet);
  /// Removes and returns every entry with the given identity, oldest first.
  std::vector<QueuedPacket> take(int source_id, std::uint16_t seq);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t evicted() const { return evicted_; }
  const std::deque<QueuedPacket>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::size_t evicted_ = 0;
  std::deque<QueuedPacket> entries_;
};

class ErrorHistogram {
 public:
  void add(int error_length);
  void reset();

  std::int64_t count(int error_length) const;
  std::int64_t total() const { return total_; }
  double density(int error_length) const;
  std::vector<double> densities() const;  // index 0 is error length 1

  void write_csv(std::ostream& out) const;

  friend bool operator==(const ErrorHistogram&, const ErrorHistogram&) = default;

 private:
  std::array<std::int64_t, kMaxErrorLength + 1> counts_{};
  std::int64_t total_ = 0;
};

/// Number of differing byte positions.
int diff_count(std::span<const std::uint8_t> corrupted, std::span<const std::uint8_t> correct);

struct Peak {
  int position = 0;
  double density = 0.0;
  double prominence = 0.0;
};

struct PeakParams {
  int smoothing_halfwidth = 1;
  double min_density = 0.05;
  double min_prominence = 0.03;
};

/// Centered moving average, window truncated at the histogram edges.
std::vector<double> smooth(std::span<const double> density, int halfwidth);

std::vector<Peak> detect_peaks(const ErrorHistogram& histogram, const PeakParams& params = {});

enum class Verdict {
  WeakLink,
  ZigbeeHidden,
  Bluetooth,
  WifiControlOnly,
  WifiControlData,
  GenericCoexistence,
  Unknown,
};

std::string to_string(Verdict v);

struct ClassifyParams {
  PeakParams peaks;
  std::int64_t min_samples = 20;
};

struct Classification {
  Verdict verdict = Verdict::Unknown;
  int interferer_length_bytes = 0;  // ZigbeeHidden only
  std::int64_t sample_count = 0;
  std::vector<Peak> peaks;

  /// "ZigbeeHidden(16)", "WifiControlData", ...
  std::string label() const;
  std::string detail() const;
};

Classification classify(const ErrorHistogram& histogram, const ClassifyParams& params = {});

/// Queue + histogram owned by one link, with the latest verdict.
class FingerprintEngine {
 public:
  explicit FingerprintEngine(std::size_t queue_capacity = 16, ClassifyParams params = {});

  /// A CRC-failed frame arrived (header intact). Returns true: a NACK goes out.
  bool on_corrupted(QueuedPacket packet);
  /// A CRC-valid frame arrived. Returns the number of queued copies matched.
  int on_correct(int source_id, std::uint16_t seq, std::span<const std::uint8_t> bytes);

  const Classification& classification() const { return last_; }
  const ErrorHistogram& histogram() const { return histogram_; }
  const CorruptedPacketQueue& queue() const { return queue_; }
  std::int64_t matched_total() const { return matched_total_; }

  void reset_histogram();

 private:
  CorruptedPacketQueue queue_;
  ErrorHistogram histogram_;
  ClassifyParams params_;
  Classification last_;
  std::int64_t matched_total_ = 0;
};

}  // namespace coex::fim
