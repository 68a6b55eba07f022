#include "coex/spectrum.hpp"

#include <cctype>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace coex {

std::string_view to_string(Technology t) {
  switch (t) {
    case Technology::Zigbee: return "zigbee";
    case Technology::Wifi: return "wifi";
    case Technology::Bluetooth: return "bluetooth";
  }
  return "?";
}

Technology technology_from_string(std::string_view s) {
  if (s == "zigbee") return Technology::Zigbee;
  if (s == "wifi") return Technology::Wifi;
  if (s == "bluetooth") return Technology::Bluetooth;
  throw std::invalid_argument("unknown technology '" + std::string(s) + "'");
}

bool valid_channel_index(Technology tech, int index) {
  switch (tech) {
    case Technology::Zigbee: return index >= kZigbeeFirstChannel && index <= kZigbeeLastChannel;
    case Technology::Wifi: return index >= 1 && index <= 14;
    case Technology::Bluetooth: return index >= 0 && index < kBluetoothChannels;
  }
  return false;
}

double center_frequency(Technology tech, int index) {
  if (!valid_channel_index(tech, index)) {
    throw ChannelError(std::string(to_string(tech)) + " channel " + std::to_string(index) +
                       " out of range");
  }
  switch (tech) {
    case Technology::Zigbee: return 2405.0 + 5.0 * (index - 11);
    case Technology::Wifi: return 2412.0 + 5.0 * (index - 1);
    case Technology::Bluetooth: return 2402.0 + index;
  }
  return 0.0;
}

double channel_width(Technology tech) {
  switch (tech) {
    case Technology::Zigbee: return 2.0;
    case Technology::Wifi: return 22.0;
    case Technology::Bluetooth: return 1.0;
  }
  return 0.0;
}

RadioChannel make_channel(Technology tech, int index) {
  return RadioChannel{tech, index, center_frequency(tech, index), channel_width(tech)};
}

OverlapDescriptor spectral_overlap(const RadioChannel& victim, const RadioChannel& interferer) {
  const double lo = std::max(victim.low_mhz(), interferer.low_mhz());
  const double hi = std::min(victim.high_mhz(), interferer.high_mhz());
  OverlapDescriptor out;
  out.fraction = hi > lo ? std::min(1.0, (hi - lo) / victim.width_mhz) : 0.0;
  out.offset_mhz = std::abs(victim.center_mhz - interferer.center_mhz);
  return out;
}

std::string_view to_string(InterfererClass c) {
  switch (c) {
    case InterfererClass::WifiData: return "WifiData";
    case InterfererClass::WifiControl: return "WifiControl";
    case InterfererClass::ZigbeeCochannel: return "ZigbeeCochannel";
    case InterfererClass::BluetoothSlot: return "BluetoothSlot";
  }
  return "?";
}

InterfererClass interferer_class_from_string(std::string_view s) {
  for (auto c : {InterfererClass::WifiData, InterfererClass::WifiControl,
                 InterfererClass::ZigbeeCochannel, InterfererClass::BluetoothSlot}) {
    if (to_string(c) == s) return c;
  }
  throw std::invalid_argument("unknown interferer class '" + std::string(s) + "'");
}

IntensityTable::IntensityTable(std::vector<IntensityRow> rows) : rows_(std::move(rows)) {
  for (const auto& r : rows_) {
    if (!(r.p_corrupt >= 0.0 && r.p_corrupt <= 1.0)) {
      throw std::invalid_argument("p_corrupt outside [0,1] for " +
                                  std::string(to_string(r.cls)));
    }
    if (!(r.offset_lo_mhz >= 0.0 && r.offset_hi_mhz > r.offset_lo_mhz)) {
      throw std::invalid_argument("bad offset bucket for " + std::string(to_string(r.cls)));
    }
    if (r.cls == InterfererClass::ZigbeeCochannel && r.p_corrupt != 1.0) {
      throw std::invalid_argument("ZigbeeCochannel rows must have p_corrupt = 1");
    }
  }
}

IntensityTable IntensityTable::defaults() {
  using C = InterfererClass;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  return IntensityTable({
      {C::WifiData, 0.0, 2.0, 0.7},
      {C::WifiData, 2.0, 5.0, 0.7},
      {C::WifiData, 5.0, 7.5, 0.7},
      {C::WifiData, 7.5, 9.0, 0.01},
      {C::WifiData, 9.0, kInf, 0.01},
      {C::WifiControl, 0.0, 2.0, 1.0},
      {C::WifiControl, 2.0, 5.0, 1.0},
      {C::WifiControl, 5.0, 7.5, 1.0},
      {C::WifiControl, 7.5, 9.0, 0.01},
      {C::WifiControl, 9.0, kInf, 0.01},
      {C::ZigbeeCochannel, 0.0, kInf, 1.0},
      {C::BluetoothSlot, 0.0, 0.75, 0.95},
      {C::BluetoothSlot, 0.75, kInf, 0.0},
  });
}

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double parse_mhz(const std::string& field) {
  if (field == "inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = std::stod(field, &used);
  if (used != field.size()) throw std::invalid_argument("trailing characters in '" + field + "'");
  return v;
}

}  // namespace

IntensityTable IntensityTable::parse_csv(std::istream& in) {
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  std::vector<IntensityRow> rows;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != "class,offset_lo_mhz,offset_hi_mhz,p_corrupt") {
        throw std::invalid_argument("intensity table line " + std::to_string(lineno) +
                                    ": unexpected header");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(trim(f));
    if (fields.size() != 4) {
      throw std::invalid_argument("intensity table line " + std::to_string(lineno) +
                                  ": expected 4 fields");
    }
    try {
      rows.push_back({interferer_class_from_string(fields[0]), parse_mhz(fields[1]),
                      parse_mhz(fields[2]), parse_mhz(fields[3])});
    } catch (const std::exception& e) {
      throw std::invalid_argument("intensity table line " + std::to_string(lineno) + ": " +
                                  e.what());
    }
  }
  if (!header_seen) throw std::invalid_argument("intensity table: empty input");
  return IntensityTable(std::move(rows));
}

IntensityTable IntensityTable::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open intensity table " + path);
  return parse_csv(in);
}

void IntensityTable::write_csv(std::ostream& out) const {
  out << "class,offset_lo_mhz,offset_hi_mhz,p_corrupt\n";
  for (const auto& r : rows_) {
    out << to_string(r.cls) << ',' << r.offset_lo_mhz << ',';
    if (std::isinf(r.offset_hi_mhz)) {
      out << "inf";
    } else {
      out << r.offset_hi_mhz;
    }
    out << ',' << r.p_corrupt << '\n';
  }
}

bool IntensityTable::has_class(InterfererClass cls) const {
  return std::any_of(rows_.begin(), rows_.end(), [&](const auto& r) { return r.cls == cls; });
}

double IntensityTable::lookup(InterfererClass cls, double offset_mhz) const {
  const IntensityRow* best = nullptr;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& r : rows_) {
    if (r.cls != cls) continue;
    double dist = 0.0;
    if (offset_mhz < r.offset_lo_mhz) {
      dist = r.offset_lo_mhz - offset_mhz;
    } else if (offset_mhz >= r.offset_hi_mhz) {
      dist = offset_mhz - r.offset_hi_mhz;
    }
    if (dist < best_dist) {
      best = &r;
      best_dist = dist;
    }
  }
  if (best == nullptr) {
    throw std::out_of_range("intensity table has no rows for " + std::string(to_string(cls)));
  }
  return best->p_corrupt;
}

double corruption_intensity(const IntensityTable& table, InterfererClass cls,
                            const OverlapDescriptor& overlap) {
  if (overlap.fraction <= 0.0) return 0.0;
  return table.lookup(cls, overlap.offset_mhz);
}

}  // namespace coex
