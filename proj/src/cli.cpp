#include "coex/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <sstream>

#ifndef COEX_FIXTURE_DIR
#define COEX_FIXTURE_DIR "fixtures"
#endif

namespace coex {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  return out;
}

std::string fmt(double v, int digits = 4) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_timeline(const LinkStats& stats, const fs::path& p) {
  auto out = open_out(p);
  out << "second,clean_pps\n";
  const double scale = 1e6 / static_cast<double>(stats.bin_us);
  for (std::size_t i = 0; i < stats.timeline.size(); ++i) {
    out << i << ',' << fmt(static_cast<double>(stats.timeline[i]) * scale, 3) << '\n';
  }
}

void write_classifications(const std::vector<ClassificationRecord>& recs, const fs::path& p) {
  auto out = open_out(p);
  out << "time_us,verdict,detail,sample_count\n";
  for (const auto& r : recs) {
    out << r.time_us << ',' << r.verdict << ',' << r.detail << ',' << r.sample_count << '\n';
  }
}

void write_actions(const std::vector<ActionRecord>& recs, const fs::path& p) {
  auto out = open_out(p);
  out << "time_us,action,detail\n";
  for (const auto& r : recs) {
    out << r.time_us << ',' << r.action.describe() << ",verdict=" << r.verdict
        << " matched=" << r.matched_collisions << '\n';
  }
}

void write_histogram(const fim::ErrorHistogram& h, const fs::path& p) {
  auto out = open_out(p);
  h.write_csv(out);
}

void finish(RunReport& report, const fs::path& out_dir) {
  report.summary_path = out_dir / "summary.txt";
  auto out = open_out(report.summary_path);
  report.write_summary(out);
}

double loss_pct(const StreamCounters& c) {
  if (c.sent == 0) return 0.0;
  return 100.0 * static_cast<double>(c.dropped + c.corrupted) / static_cast<double>(c.sent);
}

}  // namespace

void RunReport::write_summary(std::ostream& out) const {
  out << "scenario: " << scenario << '\n';
  out << "seed: " << seed << '\n';
  out << "duration_s: " << fmt(static_cast<double>(duration_us) / 1e6, 3) << '\n';
  out << "victim.sent: " << victim.sent << '\n';
  out << "victim.dropped: " << victim.dropped << '\n';
  out << "victim.corrupted: " << victim.corrupted << '\n';
  out << "victim.clean: " << victim.clean << '\n';
  out << "loss_pct: " << fmt(loss_pct, 3) << '\n';
  out << "verdict: " << capture.label() << '\n';
  out << "verdict.samples: " << capture.sample_count << '\n';
  out << "verdict.detail: " << capture.detail() << '\n';
  out << "fim.verdict: " << fim.label() << '\n';
  out << "fim.matched_collisions: " << stats.matched_collisions << '\n';
  out << "detection.collisions: " << stats.detection_collisions << '\n';
  out << "detection.time_us: " << stats.detection_time_us << '\n';
  out << "throughput.pre_pps: " << fmt(stats.pre_action_pps, 3) << '\n';
  out << "throughput.post_pps: " << fmt(stats.post_action_pps, 3) << '\n';
  out << "gain: " << fmt(stats.gain, 4) << '\n';
  for (const auto& w : warnings) out << "warning: " << w << '\n';
  auto path = [&](const char* key, const fs::path& p) {
    if (!p.empty()) out << key << ": " << p.filename().string() << '\n';
  };
  path("artifact.histogram", histogram_path);
  path("artifact.fim_histogram", fim_histogram_path);
  path("artifact.classification", classification_path);
  path("artifact.timeline", timeline_path);
  path("artifact.trace", trace_path);
  path("artifact.actions", actions_path);
}

RunReport run_scenario(const ParsedConfig& config, const fs::path& out_dir) {
  const ScenarioConfig& sc = config.scenario;
  const SimTrace trace = run(sc);
  fs::create_directories(out_dir);

  RunReport r;
  r.scenario = sc.name;
  r.seed = sc.seed;
  r.duration_us = sc.duration_us;
  r.victim = trace.victim;
  r.loss_pct = loss_pct(trace.victim);
  r.capture_histogram = trace.capture_histogram;
  r.capture = fim::classify(trace.capture_histogram, sc.fim.classify);
  r.fim = trace.final_classification;
  r.stats = measure(trace);
  r.warnings = trace.warnings;

  r.histogram_path = out_dir / "histogram.csv";
  r.fim_histogram_path = out_dir / "fim_histogram.csv";
  r.classification_path = out_dir / "classification.csv";
  r.timeline_path = out_dir / "timeline.csv";
  r.trace_path = out_dir / "trace.csv";
  r.actions_path = out_dir / "actions.csv";
  write_histogram(trace.capture_histogram, r.histogram_path);
  write_histogram(trace.fim_histogram, r.fim_histogram_path);
  write_classifications(trace.classifications, r.classification_path);
  write_timeline(r.stats, r.timeline_path);
  write_actions(trace.actions, r.actions_path);
  {
    auto out = open_out(r.trace_path);
    trace.write_csv(out);
  }
  {
    auto out = open_out(out_dir / "intensity.csv");
    sc.intensity.write_csv(out);
  }
  finish(r, out_dir);
  return r;
}

RunReport cmd_run(const fs::path& config_path, std::uint64_t seed, const fs::path& out_dir) {
  ParsedConfig cfg = load_config(config_path.string());
  cfg.scenario.seed = seed;
  return run_scenario(cfg, out_dir);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

template <class T>
T field(const std::string& s, int line, const char* name) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
    throw TraceFormatError("line " + std::to_string(line) + ": bad " + name + " '" + s + "'");
  }
  return v;
}

}  // namespace

RunReport replay_stream(std::istream& in, const fs::path& out_dir, const FimParams& params) {
  constexpr int kReplayLength = 127;
  std::string line;
  int lineno = 0;
  if (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "time_us,stream_id,seq,outcome,error_count") {
      throw TraceFormatError("line 1: expected header 'time_us,stream_id,seq,outcome,error_count'");
    }
  }

  fim::FingerprintEngine engine(params.queue_capacity, params.classify);
  fim::ErrorHistogram capture;
  StreamCounters counters;
  std::vector<ClassificationRecord> log;
  std::vector<Micros> clean_times;
  Micros last_time = 0;
  Micros detection_time = -1;
  std::int64_t detection_collisions = -1;
  std::string last_label = "Unknown";
  const std::vector<std::uint8_t> reference(kReplayLength, 0);

  auto log_change = [&](Micros t) {
    const auto& c = engine.classification();
    if (c.label() == last_label) return;
    last_label = c.label();
    log.push_back({t, last_label, c.detail(), c.sample_count});
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 5) {
      throw TraceFormatError("line " + std::to_string(lineno) + ": expected 5 fields, got " +
                             std::to_string(f.size()));
    }
    const auto t = field<Micros>(f[0], lineno, "time_us");
    const auto stream = field<int>(f[1], lineno, "stream_id");
    const auto seq = field<unsigned>(f[2], lineno, "seq");
    const auto errors = field<int>(f[4], lineno, "error_count");
    if (seq > 0xFFFF) throw TraceFormatError("line " + std::to_string(lineno) + ": seq out of range");
    if (t < last_time) {
      throw TraceFormatError("line " + std::to_string(lineno) + ": time goes backwards");
    }
    last_time = t;
    const std::string& outcome = f[3];

    if (outcome == "Reset") {
      if (detection_time < 0) {
        detection_time = t;
        detection_collisions = engine.matched_total();
      }
      engine.reset_histogram();
      log_change(t);
      continue;
    }
    Outcome o;
    try {
      o = outcome_from_string(outcome);
    } catch (const std::exception&) {
      throw TraceFormatError("line " + std::to_string(lineno) + ": unknown outcome '" + outcome + "'");
    }
    ++counters.sent;
    switch (o) {
      case Outcome::Dropped:
        ++counters.dropped;
        break;
      case Outcome::Corrupted: {
        if (errors < 1 || errors > fim::kMaxErrorLength) {
          throw TraceFormatError("line " + std::to_string(lineno) + ": corrupted frame with " +
                                 std::to_string(errors) + " errors");
        }
        ++counters.corrupted;
        capture.add(errors);
        std::vector<std::uint8_t> bytes = reference;
        std::fill(bytes.begin(), bytes.begin() + errors, std::uint8_t{0xA5});
        engine.on_corrupted({stream, static_cast<std::uint16_t>(seq), std::move(bytes), t});
        break;
      }
      case Outcome::Clean:
        ++counters.clean;
        clean_times.push_back(t);
        if (engine.on_correct(stream, static_cast<std::uint16_t>(seq), reference) > 0) {
          log_change(t);
        }
        break;
    }
  }

  fs::create_directories(out_dir);
  RunReport r;
  r.scenario = "replay";
  r.duration_us = last_time + 1;
  r.victim = counters;
  r.loss_pct = loss_pct(counters);
  r.capture_histogram = capture;
  r.capture = fim::classify(capture, params.classify);
  r.fim = engine.classification();
  r.stats = measure(clean_times, r.duration_us, detection_time, detection_collisions,
                    engine.matched_total());
  r.histogram_path = out_dir / "histogram.csv";
  r.fim_histogram_path = out_dir / "fim_histogram.csv";
  r.classification_path = out_dir / "classification.csv";
  r.timeline_path = out_dir / "timeline.csv";
  write_histogram(capture, r.histogram_path);
  write_histogram(engine.histogram(), r.fim_histogram_path);
  write_classifications(log, r.classification_path);
  write_timeline(r.stats, r.timeline_path);
  finish(r, out_dir);
  return r;
}

RunReport cmd_replay(const fs::path& trace_path, const fs::path& out_dir, const FimParams& params) {
  std::ifstream in(trace_path);
  if (!in) throw std::runtime_error("cannot open trace '" + trace_path.string() + "'");
  return replay_stream(in, out_dir, params);
}

const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names = {
      "fig1",       "fig2",        "fig3",        "fig4",     "fig5",
      "bt-steady",  "wifi-ctrl-11", "wifi-ctrl-13", "wifi-ctrl-14", "fig13",
      "len-1100",   "len-1000",    "mixed-ch11",  "fim-458",  "fim-916"};
  return names;
}

fs::path default_fixture_dir() {
  if (const char* env = std::getenv("COEX_FIXTURES"); env && *env) return env;
  return COEX_FIXTURE_DIR;
}

FixtureRow evaluate(const std::string& name, const Expectations& ex, const RunReport& report,
                    const fim::PeakParams& peak_params) {
  FixtureRow row;
  row.name = name;
  row.pass = true;
  std::ostringstream want, got;
  auto sep = [](std::ostringstream& os) {
    if (os.tellp() > 0) os << "; ";
  };

  const auto peaks = fim::detect_peaks(report.capture_histogram, peak_params);
  auto peak_in = [&](std::pair<int, int> r) {
    for (const auto& p : peaks) {
      if (p.position >= r.first && p.position <= r.second) return true;
    }
    return false;
  };

  if (!ex.verdict.empty()) {
    sep(want);
    want << "verdict=" << ex.verdict;
    if (report.capture.label() != ex.verdict && report.fim.label() != ex.verdict) row.pass = false;
  }
  for (const auto& nv : ex.not_verdicts) {
    sep(want);
    want << "verdict!=" << nv;
    if (report.capture.label() == nv) row.pass = false;
  }
  for (const auto& r : ex.peaks) {
    sep(want);
    want << "peak@" << r.first << '-' << r.second;
    if (!peak_in(r)) row.pass = false;
  }
  for (const auto& r : ex.no_peaks) {
    sep(want);
    want << "no-peak@" << r.first << '-' << r.second;
    if (peak_in(r)) row.pass = false;
  }
  if (ex.loss_min_pct || ex.loss_max_pct) {
    sep(want);
    want << "loss%=[" << (ex.loss_min_pct ? fmt(*ex.loss_min_pct, 1) : std::string("0")) << ','
         << (ex.loss_max_pct ? fmt(*ex.loss_max_pct, 1) : std::string("100")) << ']';
    if (ex.loss_min_pct && report.loss_pct < *ex.loss_min_pct) row.pass = false;
    if (ex.loss_max_pct && report.loss_pct > *ex.loss_max_pct) row.pass = false;
  }
  if (ex.gain_min) {
    sep(want);
    want << "gain>=" << fmt(*ex.gain_min, 2);
    if (!(report.stats.gain >= *ex.gain_min)) row.pass = false;
  }
  if (ex.detection_max) {
    sep(want);
    want << "detection<=" << *ex.detection_max;
    if (report.stats.detection_collisions < 0 ||
        report.stats.detection_collisions > *ex.detection_max) {
      row.pass = false;
    }
  }

  got << "verdict=" << report.capture.label();
  if (report.fim.verdict != fim::Verdict::Unknown || report.stats.detection_time_us >= 0) {
    got << "; fim=" << report.fim.label();
  }
  got << "; peaks=";
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    if (i) got << ',';
    got << peaks[i].position;
  }
  got << "; loss%=" << fmt(report.loss_pct, 1);
  if (report.stats.detection_time_us >= 0) {
    got << "; detection=" << report.stats.detection_collisions
        << "; gain=" << fmt(report.stats.gain, 3);
  }
  row.expected = want.str();
  row.observed = got.str();
  return row;
}

std::vector<FixtureRow> cmd_fixtures(const fs::path& out_dir, const fs::path& fixture_dir) {
  const auto& names = fixture_names();
  fs::create_directories(out_dir);
  std::vector<std::future<FixtureRow>> jobs;
  for (const auto& name : names) {
    jobs.push_back(std::async(std::launch::async, [&, name] {
      const ParsedConfig cfg = load_config((fixture_dir / (name + ".cfg")).string());
      const RunReport report = run_scenario(cfg, out_dir / name);
      return evaluate(name, cfg.expect, report, cfg.scenario.fim.classify.peaks);
    }));
  }
  std::vector<FixtureRow> rows;
  for (auto& j : jobs) rows.push_back(j.get());

  auto out = open_out(out_dir / "fixtures.csv");
  out << "fixture,expected,observed,result\n";
  for (const auto& r : rows) {
    out << r.name << ",\"" << r.expected << "\",\"" << r.observed << "\","
        << (r.pass ? "pass" : "FAIL") << '\n';
  }
  return rows;
}

}  // namespace coex
