#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coex/engine.hpp"

namespace coex {

/// What the fixture runner checks after a run. All fields optional.
struct Expectations {
  std::string verdict;                          // exact label, e.g. "ZigbeeHidden(16)"
  std::vector<std::string> not_verdicts;        // labels that must not appear
  std::vector<std::pair<int, int>> peaks;       // each range must hold a peak
  std::vector<std::pair<int, int>> no_peaks;    // each range must hold none
  std::optional<double> loss_min_pct;
  std::optional<double> loss_max_pct;
  std::optional<double> gain_min;
  std::optional<std::int64_t> detection_max;    // matched collisions at first action

  bool empty() const;
};

struct ParsedConfig {
  ScenarioConfig scenario;
  Expectations expect;
  std::string intensity_path;  // resolved path, empty when defaults are used
};

/// Error carrying the offending key and (when known) its 1-based line.
class ConfigParseError : public ConfigError {
 public:
  ConfigParseError(std::string key, int line, const std::string& message);
  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

/// `base_dir` resolves a relative `intensity.file`.
ParsedConfig parse_config(const std::string& text, const std::string& base_dir = ".");
ParsedConfig load_config(const std::string& path);

}  // namespace coex
