#include "coex/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace coex {

bool Expectations::empty() const {
  return verdict.empty() && not_verdicts.empty() && peaks.empty() && no_peaks.empty() &&
         !loss_min_pct && !loss_max_pct && !gain_min && !detection_max;
}

ConfigParseError::ConfigParseError(std::string key, int line, const std::string& message)
    : ConfigError((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + "key '" +
                  key + "': " + message),
      key_(std::move(key)),
      line_(line) {}

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Entry {
  std::string value;
  int line = 0;
};

class Reader {
 public:
  Reader(const std::string& key, const Entry& e) : key_(key), e_(e) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigParseError(key_, e_.line, what);
  }

  std::int64_t integer() const {
    std::int64_t v = 0;
    const auto& s = e_.value;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) fail("expected an integer, got '" + s + "'");
    return v;
  }

  std::uint64_t unsigned_integer() const {
    std::uint64_t v = 0;
    const auto& s = e_.value;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      fail("expected an unsigned integer, got '" + s + "'");
    }
    return v;
  }

  int int32() const {
    const auto v = integer();
    if (v < -2'000'000'000 || v > 2'000'000'000) fail("integer out of range");
    return static_cast<int>(v);
  }

  double real() const {
    double v = 0;
    const auto& s = e_.value;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) fail("expected a number, got '" + s + "'");
    return v;
  }

  bool boolean() const {
    std::string s = e_.value;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    fail("expected true/false, got '" + e_.value + "'");
  }

  const std::string& text() const { return e_.value; }

  std::pair<int, int> range() const { return parse_range(e_.value); }

  std::vector<std::pair<int, int>> ranges() const {
    std::vector<std::pair<int, int>> out;
    for (const auto& part : split(e_.value, ',')) out.push_back(parse_range(part));
    return out;
  }

 private:
  std::pair<int, int> parse_range(const std::string& part) const {
    auto num = [&](const std::string& s) {
      int v = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) fail("bad range '" + part + "'");
      return v;
    };
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      const int v = num(trim(part));
      return {v, v};
    }
    const int lo = num(trim(part.substr(0, dash)));
    const int hi = num(trim(part.substr(dash + 1)));
    if (hi < lo) fail("range '" + part + "' is reversed");
    return {lo, hi};
  }

  const std::string& key_;
  const Entry& e_;
};

using Setter = std::function<void(const Reader&)>;

Technology parse_technology(const Reader& r) {
  try {
    return technology_from_string(r.text());
  } catch (const std::exception&) {
    r.fail("unknown technology '" + r.text() + "' (zigbee, wifi, bluetooth)");
  }
}

}  // namespace

ParsedConfig parse_config(const std::string& text, const std::string& base_dir) {
  std::map<std::string, Entry> entries;
  std::vector<std::string> interferer_order;
  {
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const auto hash = raw.find('#');
      if (hash != std::string::npos) raw.erase(hash);
      const std::string s = trim(raw);
      if (s.empty()) continue;
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        throw ConfigParseError(s, line, "expected 'key = value'");
      }
      const std::string key = trim(s.substr(0, eq));
      const std::string value = trim(s.substr(eq + 1));
      if (key.empty()) throw ConfigParseError(key, line, "empty key");
      if (value.empty()) throw ConfigParseError(key, line, "empty value");
      if (auto it = entries.find(key); it != entries.end()) {
        throw ConfigParseError(key, line,
                               "duplicate key (first set on line " +
                                   std::to_string(it->second.line) + ")");
      }
      entries[key] = {value, line};
      if (key.rfind("interferer.", 0) == 0) {
        const auto dot = key.find('.', 11);
        if (dot == std::string::npos) throw ConfigParseError(key, line, "expected interferer.<name>.<field>");
        const std::string name = key.substr(11, dot - 11);
        if (std::find(interferer_order.begin(), interferer_order.end(), name) ==
            interferer_order.end()) {
          interferer_order.push_back(name);
        }
      }
    }
  }

  ParsedConfig out;
  ScenarioConfig& sc = out.scenario;
  Expectations& ex = out.expect;
  WeakLinkParams weak;
  bool weak_enabled = false;

  std::map<std::string, Setter> setters = {
      {"name", [&](const Reader& r) { sc.name = r.text(); }},
      {"seed", [&](const Reader& r) { sc.seed = r.unsigned_integer(); }},
      {"duration_s",
       [&](const Reader& r) {
         const double d = r.real();
         if (!(d > 0.0)) r.fail("must be positive");
         sc.duration_us = static_cast<Micros>(d * 1e6 + 0.5);
       }},
      {"victim.channel", [&](const Reader& r) { sc.victim_channel = r.int32(); }},
      {"victim.rate_pps", [&](const Reader& r) { sc.victim.rate_pps = r.real(); }},
      {"victim.length", [&](const Reader& r) { sc.victim.length_bytes = r.int32(); }},
      {"victim.jitter_us", [&](const Reader& r) { sc.victim.jitter_us = r.integer(); }},
      {"victim.phase_us", [&](const Reader& r) { sc.victim.phase_us = r.integer(); }},
      {"victim.grid_us", [&](const Reader& r) { sc.victim.grid_us = r.integer(); }},
      {"weak_link.enabled", [&](const Reader& r) { weak_enabled = r.boolean(); }},
      {"weak_link.p_symbol", [&](const Reader& r) { weak.p_symbol = r.real(); }},
      {"weak_link.burst_continue", [&](const Reader& r) { weak.burst_continue = r.real(); }},
      {"weak_link.sync_loss", [&](const Reader& r) { weak.sync_loss = r.real(); }},
      {"cca.zigbee", [&](const Reader& r) { sc.cca.zigbee_cca_enabled = r.boolean(); }},
      {"cca.wifi_senses_zigbee", [&](const Reader& r) { sc.cca.wifi_senses_zigbee = r.real(); }},
      {"cca.wifi_senses_wifi", [&](const Reader& r) { sc.cca.wifi_senses_wifi = r.boolean(); }},
      {"cca.bluetooth_senses_any",
       [&](const Reader& r) { sc.cca.bluetooth_senses_any = r.boolean(); }},
      {"cca.max_deferrals", [&](const Reader& r) { sc.cca.max_cca_deferrals = r.int32(); }},
      {"cca.backoff_max_us", [&](const Reader& r) { sc.cca.backoff_max_us = r.integer(); }},
      {"arq.enabled", [&](const Reader& r) { sc.arq.enabled = r.boolean(); }},
      {"arq.timeout_us", [&](const Reader& r) { sc.arq.timeout_us = r.integer(); }},
      {"arq.max_attempts", [&](const Reader& r) { sc.arq.max_attempts = r.int32(); }},
      {"fim.queue_capacity",
       [&](const Reader& r) {
         const auto v = r.integer();
         if (v <= 0) r.fail("must be positive");
         sc.fim.queue_capacity = static_cast<std::size_t>(v);
       }},
      {"fim.min_samples", [&](const Reader& r) { sc.fim.classify.min_samples = r.integer(); }},
      {"fim.smoothing_halfwidth",
       [&](const Reader& r) {
         const int v = r.int32();
         if (v < 0) r.fail("must be >= 0");
         sc.fim.classify.peaks.smoothing_halfwidth = v;
       }},
      {"fim.min_density", [&](const Reader& r) { sc.fim.classify.peaks.min_density = r.real(); }},
      {"fim.min_prominence",
       [&](const Reader& r) { sc.fim.classify.peaks.min_prominence = r.real(); }},
      {"adapt.enabled", [&](const Reader& r) { sc.adapt.enabled = r.boolean(); }},
      {"adapt.reduced_length", [&](const Reader& r) { sc.adapt.reduced_length_bytes = r.int32(); }},
      {"intensity.file",
       [&](const Reader& r) {
         std::filesystem::path p(r.text());
         if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
         out.intensity_path = p.string();
         try {
           sc.intensity = IntensityTable::load_csv(out.intensity_path);
         } catch (const std::exception& e) {
           r.fail(e.what());
         }
       }},
      {"intensity.wifi_data_min_length",
       [&](const Reader& r) { sc.wifi_data_min_effective_length = r.int32(); }},
      {"expect.verdict", [&](const Reader& r) { ex.verdict = r.text(); }},
      {"expect.not_verdict", [&](const Reader& r) { ex.not_verdicts = split(r.text(), ','); }},
      {"expect.peaks", [&](const Reader& r) { ex.peaks = r.ranges(); }},
      {"expect.no_peaks", [&](const Reader& r) { ex.no_peaks = r.ranges(); }},
      {"expect.loss_min_pct", [&](const Reader& r) { ex.loss_min_pct = r.real(); }},
      {"expect.loss_max_pct", [&](const Reader& r) { ex.loss_max_pct = r.real(); }},
      {"expect.gain_min", [&](const Reader& r) { ex.gain_min = r.real(); }},
      {"expect.detection_max", [&](const Reader& r) { ex.detection_max = r.integer(); }},
  };

  sc.interferers.resize(interferer_order.size());
  for (std::size_t i = 0; i < interferer_order.size(); ++i) {
    InterfererSpec& spec = sc.interferers[i];
    spec.name = interferer_order[i];
    const std::string prefix = "interferer." + spec.name + ".";
    auto technology_key = entries.find(prefix + "technology");
    if (technology_key == entries.end()) {
      const auto first = std::find_if(entries.begin(), entries.end(), [&](const auto& kv) {
        return kv.first.rfind(prefix, 0) == 0;
      });
      throw ConfigParseError(prefix + "technology", first->second.line, "missing required key");
    }
    spec.technology = parse_technology(Reader(technology_key->first, technology_key->second));

    setters[prefix + "technology"] = [](const Reader&) {};
    setters[prefix + "channel"] = [&spec](const Reader& r) { spec.channel = r.int32(); };
    switch (spec.technology) {
      case Technology::Zigbee:
        setters[prefix + "rate_pps"] = [&spec](const Reader& r) { spec.zigbee.rate_pps = r.real(); };
        setters[prefix + "length"] = [&spec](const Reader& r) {
          spec.zigbee.length_bytes = r.int32();
        };
        setters[prefix + "jitter_us"] = [&spec](const Reader& r) {
          spec.zigbee.jitter_us = r.integer();
        };
        setters[prefix + "phase_us"] = [&spec](const Reader& r) {
          spec.zigbee.phase_us = r.integer();
        };
        setters[prefix + "slip_prob"] = [&spec](const Reader& r) {
          spec.zigbee.slip_prob = r.real();
        };
        setters[prefix + "slip_us"] = [&spec](const Reader& r) {
          spec.zigbee.slip_us = r.integer();
        };
        setters[prefix + "grid_us"] = [&spec](const Reader& r) {
          spec.zigbee.grid_us = r.integer();
        };
        break;
      case Technology::Wifi:
        setters[prefix + "control_interval_us"] = [&spec](const Reader& r) {
          spec.wifi.control_interval_us = r.integer();
        };
        setters[prefix + "control_length"] = [&spec](const Reader& r) {
          spec.wifi.control_length_bytes = r.int32();
        };
        setters[prefix + "data_rate_pps"] = [&spec](const Reader& r) {
          spec.wifi.data_rate_pps = r.real();
        };
        setters[prefix + "data_length"] = [&spec](const Reader& r) {
          spec.wifi.data_length_bytes = r.int32();
        };
        setters[prefix + "phase_us"] = [&spec](const Reader& r) {
          spec.wifi.phase_us = r.integer();
        };
        break;
      case Technology::Bluetooth:
        setters[prefix + "mode"] = [&spec](const Reader& r) {
          if (r.text() == "steady") {
            spec.bluetooth.mode = BluetoothMode::Steady;
          } else if (r.text() == "establishment") {
            spec.bluetooth.mode = BluetoothMode::Establishment;
          } else {
            r.fail("expected steady or establishment");
          }
        };
        setters[prefix + "slots"] = [&spec](const Reader& r) {
          spec.bluetooth.slots_per_packet = r.int32();
        };
        setters[prefix + "phase_us"] = [&spec](const Reader& r) {
          spec.bluetooth.phase_us = r.integer();
        };
        break;
    }
  }

  // Apply in line order so that the first failure reported is the earliest one.
  std::vector<std::pair<std::string, const Entry*>> ordered;
  for (const auto& kv : entries) ordered.emplace_back(kv.first, &kv.second);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.second->line < b.second->line; });
  for (const auto& [key, entry] : ordered) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigParseError(key, entry->line, "unknown key");
    it->second(Reader(key, *entry));
  }
  if (weak_enabled) sc.weak_link = weak;

  try {
    sc.validate();
  } catch (const ConfigError& e) {
    // Point the diagnostic at the line that set the offending key, if any.
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    const std::string key = colon == std::string::npos ? std::string() : msg.substr(0, colon);
    const std::string detail = colon == std::string::npos ? msg : trim(msg.substr(colon + 1));
    if (key.rfind("interferer.", 0) == 0 && !entries.count(key)) {
      const auto dot = key.rfind('.');
      const std::string tech_key = key.substr(0, dot) + ".technology";
      if (entries.count(tech_key)) {
        throw ConfigParseError(key, entries[tech_key].line, detail);
      }
    }
    const auto hit = entries.find(key);
    throw ConfigParseError(key, hit == entries.end() ? 0 : hit->second.line,
                           hit == entries.end() ? detail + " (default value)" : detail);
  }
  return out;
}

ParsedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(ss.str(), dir.empty() ? "." : dir.string());
}

}  // namespace coex
