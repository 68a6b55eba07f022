#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "coex/adapt.hpp"
#include "coex/config.hpp"
#include "coex/engine.hpp"
#include "coex/fim.hpp"

namespace coex {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitFixtureMismatch = 2;

struct RunReport {
  std::string scenario;
  std::uint64_t seed = 0;
  Micros duration_us = 0;
  StreamCounters victim;
  double loss_pct = 0.0;  // (dropped + corrupted) / sent
  fim::ErrorHistogram capture_histogram;  // every corrupted frame received
  fim::Classification capture;
  fim::Classification fim;      // FIM's live classification at the end
  LinkStats stats;
  std::vector<std::string> warnings;

  std::filesystem::path histogram_path;
  std::filesystem::path fim_histogram_path;
  std::filesystem::path classification_path;
  std::filesystem::path timeline_path;
  std::filesystem::path trace_path;
  std::filesystem::path actions_path;
  std::filesystem::path summary_path;

  void write_summary(std::ostream& out) const;
};

/// Runs a scenario and writes every artifact into `out_dir`.
RunReport run_scenario(const ParsedConfig& config, const std::filesystem::path& out_dir);

/// `seed` replaces the config's seed.
RunReport cmd_run(const std::filesystem::path& config_path, std::uint64_t seed,
                  const std::filesystem::path& out_dir);

class TraceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Replays a trace through the FIM pipeline only.
RunReport cmd_replay(const std::filesystem::path& trace_path, const std::filesystem::path& out_dir,
                     const FimParams& params = {});
RunReport replay_stream(std::istream& trace, const std::filesystem::path& out_dir,
                        const FimParams& params = {});

struct FixtureRow {
  std::string name;
  std::string expected;
  std::string observed;
  bool pass = false;
};

/// Names of the shipped fixture suite, in run order.
const std::vector<std::string>& fixture_names();

/// Directory holding the shipped fixture files (COEX_FIXTURES overrides).
std::filesystem::path default_fixture_dir();

/// Checks a finished run against its expectations; fills expected/observed text.
FixtureRow evaluate(const std::string& name, const Expectations& expect, const RunReport& report,
                    const fim::PeakParams& peaks);

std::vector<FixtureRow> cmd_fixtures(const std::filesystem::path& out_dir,
                                     const std::filesystem::path& fixture_dir = default_fixture_dir());

}  // namespace coex
