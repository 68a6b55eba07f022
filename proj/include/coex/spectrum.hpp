#pragma once

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coex {

enum class Technology { Zigbee, Wifi, Bluetooth };

std::string_view to_string(Technology t);
Technology technology_from_string(std::string_view s);

/// A channel of one of the three 2.4 GHz technologies.
///
/// Only constructible through make_channel(), which enforces the channel map:
///   Zigbee    11..26, 2 MHz wide,  2405 + 5 (k - 11)
///   Wifi       1..14, 22 MHz wide, 2412 + 5 (k - 1)
///   Bluetooth  0..78, 1 MHz wide,  2402 + k
struct RadioChannel {
  Technology technology = Technology::Zigbee;
  int index = 11;
  double center_mhz = 2405.0;
  double width_mhz = 2.0;

  double low_mhz() const { return center_mhz - width_mhz / 2.0; }
  double high_mhz() const { return center_mhz + width_mhz / 2.0; }

  friend bool operator==(const RadioChannel&, const RadioChannel&) = default;
};

class ChannelError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

bool valid_channel_index(Technology tech, int index);
double center_frequency(Technology tech, int index);
double channel_width(Technology tech);
RadioChannel make_channel(Technology tech, int index);

inline constexpr int kBluetoothChannels = 79;
inline constexpr int kZigbeeFirstChannel = 11;
inline constexpr int kZigbeeLastChannel = 26;

struct OverlapDescriptor {
  double fraction = 0.0;  // share of the victim band covered, in [0, 1]
  double offset_mhz = 0.0;
};

/// Intersection of the two rectangular bands, normalized by the victim width.
OverlapDescriptor spectral_overlap(const RadioChannel& victim,
                                   const RadioChannel& interferer);

enum class InterfererClass { WifiData, WifiControl, ZigbeeCochannel, BluetoothSlot };

std::string_view to_string(InterfererClass c);
InterfererClass interferer_class_from_string(std::string_view s);

struct IntensityRow {
  InterfererClass cls;
  double offset_lo_mhz;
  double offset_hi_mhz;  // exclusive, except for the open-ended last bucket
  double p_corrupt;
};

/// Per-byte corruption probability keyed by interferer class and center offset.
///
/// Lookup picks the row whose [lo, hi) contains the offset; when none does,
/// the nearest bucket of the same class wins (distance to the interval).
class IntensityTable {
 public:
  IntensityTable() = default;
  explicit IntensityTable(std::vector<IntensityRow> rows);

  /// Shipped calibration; identical to fixtures/intensity.csv.
  static IntensityTable defaults();

  static IntensityTable parse_csv(std::istream& in);
  static IntensityTable load_csv(const std::string& path);
  void write_csv(std::ostream& out) const;

  double lookup(InterfererClass cls, double offset_mhz) const;
  bool has_class(InterfererClass cls) const;
  const std::vector<IntensityRow>& rows() const { return rows_; }

 private:
  std::vector<IntensityRow> rows_;
};

/// Returns 0 when the bands are disjoint, otherwise the table probability.
double corruption_intensity(const IntensityTable& table, InterfererClass cls,
                            const OverlapDescriptor& overlap);

}  // namespace coex
