#include "coex/engine.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <ostream>
#include <queue>

namespace coex {

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Dropped: return "Dropped";
    case Outcome::Corrupted: return "Corrupted";
    case Outcome::Clean: return "Clean";
  }
  return "Clean";
}

Outcome outcome_from_string(const std::string& s) {
  if (s == "Dropped") return Outcome::Dropped;
  if (s == "Corrupted") return Outcome::Corrupted;
  if (s == "Clean") return Outcome::Clean;
  throw std::invalid_argument("unknown outcome '" + s + "'");
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& what) {
    throw ConfigError(key + ": " + what);
  };
  if (!valid_channel_index(Technology::Zigbee, victim_channel)) {
    fail("victim.channel", "ZigBee channel must be in 11..26, got " +
                               std::to_string(victim_channel));
  }
  if (!(victim.rate_pps > 0.0)) fail("victim.rate_pps", "must be positive");
  if (victim.length_bytes < kHeaderRegionBytes + 1 || victim.length_bytes > 127) {
    fail("victim.length", "must be in 7..127");
  }
  if (victim.jitter_us < 0) fail("victim.jitter_us", "must be non-negative");
  if (victim.grid_us < 0) fail("victim.grid_us", "must be non-negative");
  if (duration_us <= 0) fail("duration_s", "must be positive");
  for (std::size_t i = 0; i < interferers.size(); ++i) {
    const auto& it = interferers[i];
    const std::string key = "interferer." + (it.name.empty() ? std::to_string(i) : it.name);
    switch (it.technology) {
      case Technology::Zigbee:
        if (!valid_channel_index(Technology::Zigbee, it.channel)) {
          fail(key + ".channel", "ZigBee channel must be in 11..26");
        }
        if (!(it.zigbee.rate_pps > 0.0)) fail(key + ".rate_pps", "must be positive");
        if (it.zigbee.length_bytes <= kZigbeePhyHeaderBytes || it.zigbee.length_bytes > 127) {
          fail(key + ".length", "must be in 6..127");
        }
        if (it.zigbee.jitter_us < 0) fail(key + ".jitter_us", "must be non-negative");
        if (!(it.zigbee.slip_prob >= 0.0 && it.zigbee.slip_prob <= 1.0)) {
          fail(key + ".slip_prob", "must be a probability");
        }
        if (it.zigbee.slip_us < 0) fail(key + ".slip_us", "must be non-negative");
        if (it.zigbee.grid_us < 0) fail(key + ".grid_us", "must be non-negative");
        break;
      case Technology::Wifi:
        if (!valid_channel_index(Technology::Wifi, it.channel)) {
          fail(key + ".channel", "WiFi channel must be in 1..14");
        }
        if (it.wifi.data_rate_pps < 0.0) fail(key + ".data_rate_pps", "must be >= 0");
        if (it.wifi.control_interval_us < 0) fail(key + ".control_interval_us", "must be >= 0");
        if (it.wifi.control_length_bytes <= 0) fail(key + ".control_length", "must be positive");
        if (it.wifi.data_length_bytes <= 0) fail(key + ".data_length", "must be positive");
        break;
      case Technology::Bluetooth:
        if (it.bluetooth.slots_per_packet != 1 && it.bluetooth.slots_per_packet != 3 &&
            it.bluetooth.slots_per_packet != 5) {
          fail(key + ".slots", "must be 1, 3 or 5");
        }
        break;
    }
  }
  if (weak_link) {
    try {
      weak_link->validate();
    } catch (const std::exception& e) {
      fail("weak_link", e.what());
    }
  }
  if (!(cca.wifi_senses_zigbee >= 0.0 && cca.wifi_senses_zigbee <= 1.0)) {
    fail("cca.wifi_senses_zigbee", "must be a probability");
  }
  if (cca.max_cca_deferrals < 0) fail("cca.max_deferrals", "must be >= 0");
  if (cca.backoff_max_us < 0) fail("cca.backoff_max_us", "must be >= 0");
  if (arq.max_attempts < 1) fail("arq.max_attempts", "must be >= 1");
  if (arq.timeout_us < 0) fail("arq.timeout_us", "must be >= 0");
  if (fim.queue_capacity == 0) fail("fim.queue_capacity", "must be positive");
  if (adapt.reduced_length_bytes < kHeaderRegionBytes + 1) {
    fail("adapt.reduced_length", "must leave room for a payload");
  }
  using C = InterfererClass;
  for (auto c : {C::WifiData, C::WifiControl, C::ZigbeeCochannel, C::BluetoothSlot}) {
    if (!intensity.has_class(c)) {
      fail("intensity", "table has no rows for " + std::string(to_string(c)));
    }
  }
}

void SimTrace::write_csv(std::ostream& out) const {
  out << "time_us,stream_id,seq,outcome,error_count\n";
  std::size_t ai = 0;
  for (const auto& ev : events) {
    out << ev.time_us << ',' << ev.stream_id << ',' << ev.seq << ',' << to_string(ev.outcome)
        << ',' << ev.error_count << '\n';
    while (ai < actions.size() && actions[ai].time_us == ev.time_us) {
      if (actions[ai].action.kind != ActionKind::None) {
        out << ev.time_us << ",0,0,Reset,0\n";
      }
      ++ai;
    }
  }
}

SenseDecision carrier_sense_gate(const Frame& sender, std::span<const Frame> concurrent,
                                 const CcaFlags& flags, int deferrals, Micros now_us, Rng& rng,
                                 bool senses_victim_rts,
                                 int victim_source) {
  Micros blocked_until = -1;
  for (std::size_t i = 0; i < concurrent.size(); ++i) {
    const Frame& c = concurrent[i];
    if (c.start_us > now_us || c.end_us() <= now_us) continue;
    const auto ov = spectral_overlap(sender.channel, c.channel);
    if (ov.fraction <= 0.0) continue;
    bool blocks = false;
    switch (sender.technology) {
      case Technology::Bluetooth:
        blocks = flags.bluetooth_senses_any;
        break;
      case Technology::Wifi:
        if (c.technology == Technology::Wifi) blocks = flags.wifi_senses_wifi;
        if (c.technology == Technology::Zigbee && sender.kind == FrameKind::Data &&
            flags.wifi_senses_zigbee > 0.0) {
          blocks = rng.bernoulli(flags.wifi_senses_zigbee);
        }
        break;
      case Technology::Zigbee:
        if (c.technology == Technology::Zigbee) {
          blocks = flags.zigbee_cca_enabled ||
                   (senses_victim_rts &&
                    (c.source_id == victim_source || sender.source_id == victim_source));
        }
        // Energy detection only catches a WiFi signal covering the whole ZigBee band.
        if (c.technology == Technology::Wifi) {
          blocks = flags.zigbee_cca_enabled && ov.fraction >= 1.0;
        }
        break;
    }
    if (blocks) blocked_until = std::max(blocked_until, c.end_us());
  }
  if (blocked_until < 0) return {true, now_us};
  if (sender.technology == Technology::Zigbee && deferrals >= flags.max_cca_deferrals) {
    return {true, now_us};
  }
  const Micros backoff = flags.backoff_max_us > 0 ? rng.uniform_int(0, flags.backoff_max_us) : 0;
  return {false, blocked_until + backoff};
}

namespace {

constexpr int kVictimStream = 0;

struct Attempt {
  Micros time_us;
  std::uint64_t order;
  int stream;
  std::size_t frame;
  int deferrals;

  bool operator>(const Attempt& o) const {
    if (time_us != o.time_us) return time_us > o.time_us;
    if (stream != o.stream) return stream > o.stream;
    return order > o.order;
  }
};

struct StreamState {
  Technology technology = Technology::Zigbee;
  std::vector<Frame> intents;
  Micros busy_until = 0;
  std::int64_t sent = 0;
};

struct OnAir {
  Frame frame;
  int stream = 0;
};

struct Outstanding {
  std::uint16_t seq = 0;
  int attempts = 0;
  int length_bytes = 0;
  Micros last_end = 0;
};

class Simulation {
 public:
  explicit Simulation(const ScenarioConfig& cfg)
      : cfg_(cfg),
        fim_(cfg.fim.queue_capacity, cfg.fim.classify),
        backoff_rng_(derive_seed(cfg.seed, "backoff")),
        payload_seed_(derive_seed(cfg.seed, "victim-payload")) {
    state_.victim_channel = cfg.victim_channel;
    state_.victim_length_bytes = cfg.victim.length_bytes;
    state_.reduced_length_bytes = cfg.adapt.reduced_length_bytes;
    for (const auto& it : cfg.interferers) {
      if (it.technology == Technology::Wifi) state_.wifi_channels.push_back(it.channel);
    }
    build_streams();
  }

  SimTrace run() {
    for (std::size_t s = 0; s < streams_.size(); ++s) {
      if (!streams_[s].intents.empty()) {
        push({streams_[s].intents.front().start_us, 0, static_cast<int>(s), 0, 0});
      }
    }
    while (!heap_.empty()) {
      const Attempt a = heap_.top();
      heap_.pop();
      resolve_until(a.time_us);
      step(a);
    }
    resolve_until(std::numeric_limits<Micros>::max());

    trace_.duration_us = cfg_.duration_us;
    for (std::size_t s = 1; s < streams_.size(); ++s) {
      trace_.interferer_sent.push_back(streams_[s].sent);
    }
    trace_.fim_histogram = fim_.histogram();
    trace_.final_classification = fim_.classification();
    trace_.matched_collisions = fim_.matched_total();
    return std::move(trace_);
  }

 private:
  void build_streams() {
    StreamState victim;
    victim.technology = Technology::Zigbee;
    StreamConfig vcfg = cfg_.victim;
    vcfg.rng_seed = derive_seed(cfg_.seed, "stream", 0);
    victim.intents = zigbee_stream(vcfg, make_channel(Technology::Zigbee, cfg_.victim_channel),
                                   cfg_.duration_us, kVictimStream);
    streams_.push_back(std::move(victim));

    for (std::size_t i = 0; i < cfg_.interferers.size(); ++i) {
      const auto& spec = cfg_.interferers[i];
      const int source = static_cast<int>(i) + 1;
      const std::uint64_t seed = derive_seed(cfg_.seed, "stream", source);
      StreamState st;
      st.technology = spec.technology;
      switch (spec.technology) {
        case Technology::Zigbee: {
          StreamConfig zc = spec.zigbee;
          zc.rng_seed = seed;
          st.intents = zigbee_stream(zc, make_channel(Technology::Zigbee, spec.channel),
                                     cfg_.duration_us, source);
          break;
        }
        case Technology::Wifi:
          st.intents = wifi_stream(spec.wifi, make_channel(Technology::Wifi, spec.channel),
                                   cfg_.duration_us, source);
          break;
        case Technology::Bluetooth: {
          BluetoothStreamConfig bc = spec.bluetooth;
          bc.rng_seed = seed;
          st.intents = bluetooth_stream(bc, cfg_.duration_us, source);
          break;
        }
      }
      for (const auto& f : st.intents) max_airtime_ = std::max(max_airtime_, f.airtime_us());
      streams_.push_back(std::move(st));
    }
    max_airtime_ = std::max(max_airtime_, airtime_us(127, kZigbeeBitrate));
  }

  void push(Attempt a) {
    a.order = order_++;
    heap_.push(a);
  }

  void schedule_next(int stream, std::size_t frame, Micros now) {
    auto& st = streams_[static_cast<std::size_t>(stream)];
    if (frame + 1 >= st.intents.size()) return;
    const Micros t = std::max({st.intents[frame + 1].start_us, st.busy_until, now});
    push({t, 0, stream, frame + 1, 0});
  }

  void step(const Attempt& a) {
    auto& st = streams_[static_cast<std::size_t>(a.stream)];
    const Micros t = std::max(a.time_us, st.busy_until);
    if (t > a.time_us) {
      push({t, 0, a.stream, a.frame, a.deferrals});
      return;
    }
    Frame f = st.intents[a.frame];

    // A WiFi data frame that slipped past its successor's slot is discarded.
    if (st.technology == Technology::Wifi && f.kind == FrameKind::Data &&
        a.frame + 1 < st.intents.size() && t > f.start_us &&
        t >= st.intents[a.frame + 1].start_us) {
      schedule_next(a.stream, a.frame, t);
      return;
    }

    const bool is_victim = a.stream == kVictimStream;
    if (is_victim) {
      f.channel = make_channel(Technology::Zigbee, state_.victim_channel);
      f.length_bytes = state_.victim_length_bytes;
    }
    f.start_us = t;

    concurrent_.clear();
    for (auto it = air_.rbegin(); it != air_.rend(); ++it) {
      if (it->frame.start_us + max_airtime_ < t) break;
      if (it->stream == a.stream) continue;
      if (it->frame.start_us <= t && it->frame.end_us() > t) {
        concurrent_.push_back(it->frame);
      }
    }
    const bool rts = state_.rts_cts && f.technology == Technology::Zigbee;
    const auto decision = carrier_sense_gate(f, concurrent_, cfg_.cca, a.deferrals, t,
                                             backoff_rng_, rts, kVictimStream);
    if (!decision.transmit_now) {
      push({decision.retry_at_us, 0, a.stream, a.frame, a.deferrals + 1});
      return;
    }

    if (is_victim) assign_victim_identity(f, t);

    OnAir rec;
    rec.frame = std::move(f);
    rec.stream = a.stream;
    st.busy_until = rec.frame.end_us();
    ++st.sent;
    air_.push_back(std::move(rec));
    if (is_victim) pending_victims_.push_back(air_.size() - 1 + air_offset_);
    schedule_next(a.stream, a.frame, t);
  }

  void assign_victim_identity(Frame& f, Micros now) {
    if (cfg_.arq.enabled && !retry_.empty() &&
        retry_.front().last_end + cfg_.arq.timeout_us <= now) {
      const Outstanding o = retry_.front();
      retry_.pop_front();
      f.seq = o.seq;
      f.length_bytes = o.length_bytes;
      current_attempt_ = o.attempts + 1;
    } else {
      f.seq = next_seq_++;
      current_attempt_ = 1;
    }
    attempts_.push_back(current_attempt_);
    f.payload = make_payload(payload_seed_, kVictimStream, f.seq, f.length_bytes);
  }

  const OnAir& air_at(std::size_t absolute) const { return air_[absolute - air_offset_]; }

  void resolve_until(Micros now) {
    while (!pending_victims_.empty()) {
      const std::size_t idx = pending_victims_.front();
      if (air_at(idx).frame.end_us() > now) break;
      resolve(idx);
      pending_victims_.pop_front();
      attempts_.pop_front();
    }
    // Drop frames that can no longer touch an unresolved victim frame or a CCA.
    Micros horizon = now == std::numeric_limits<Micros>::max() ? now : now - max_airtime_;
    if (!pending_victims_.empty()) {
      horizon = std::min(horizon, air_at(pending_victims_.front()).frame.start_us - max_airtime_);
    }
    while (!air_.empty() && air_.front().frame.end_us() < horizon) {
      air_.pop_front();
      ++air_offset_;
    }
  }

  double intensity_for(const Frame& victim, const Frame& other, const OverlapDescriptor& ov) const {
    InterfererClass cls = InterfererClass::ZigbeeCochannel;
    switch (other.technology) {
      case Technology::Zigbee: cls = InterfererClass::ZigbeeCochannel; break;
      case Technology::Bluetooth: cls = InterfererClass::BluetoothSlot; break;
      case Technology::Wifi:
        if (other.kind == FrameKind::Control) {
          cls = InterfererClass::WifiControl;
        } else {
          if (other.length_bytes < cfg_.wifi_data_min_effective_length) return 0.0;
          cls = InterfererClass::WifiData;
        }
        break;
    }
    (void)victim;
    return corruption_intensity(cfg_.intensity, cls, ov);
  }

  void resolve(std::size_t idx) {
    const Frame& v = air_at(idx).frame;
    const int attempt = attempts_.front();
    Rng rng(derive_seed(cfg_.seed, "mask", victim_counter_++));

    std::vector<CorruptionMask> masks;
    unsigned causes = 0;
    for (std::size_t j = air_offset_; j < air_offset_ + air_.size(); ++j) {
      if (j == idx) continue;
      const OnAir& o = air_at(j);
      if (o.stream == kVictimStream) continue;
      if (o.frame.start_us >= v.end_us() || o.frame.end_us() <= v.start_us) continue;
      const auto ov = spectral_overlap(v.channel, o.frame.channel);
      if (ov.fraction <= 0.0) continue;
      const double p = intensity_for(v, o.frame, ov);
      auto m = collision_mask(v, o.frame, p, rng);
      if (m.error_count() > 0) {
        switch (o.frame.technology) {
          case Technology::Zigbee: causes |= kCauseZigbee; break;
          case Technology::Wifi: causes |= kCauseWifi; break;
          case Technology::Bluetooth: causes |= kCauseBluetooth; break;
        }
      }
      masks.push_back(std::move(m));
    }
    if (cfg_.weak_link) {
      WeakLinkParams wl = *cfg_.weak_link;
      if (state_.redundancy) wl.p_symbol /= 2.0;
      auto m = weak_link_mask(v.length_bytes, wl, rng);
      if (m.error_count() > 0) causes |= kCauseWeakLink;
      masks.push_back(std::move(m));
    }
    masks.emplace_back(v.length_bytes);
    const CorruptionMask mask = merge(masks);
    bool lost_sync = false;
    if (cfg_.weak_link && cfg_.weak_link->sync_loss > 0.0) {
      Rng srng(derive_seed(cfg_.seed, "sync", victim_counter_));
      lost_sync = srng.uniform() < cfg_.weak_link->sync_loss;
      if (lost_sync) causes |= kCauseWeakLink;
    }

    ReceptionEvent ev;
    ev.time_us = v.end_us();
    ev.start_us = v.start_us;
    ev.stream_id = kVictimStream;
    ev.seq = v.seq;
    ev.attempt = attempt;
    ev.channel = v.channel.index;
    ev.length_bytes = v.length_bytes;
    ev.error_count = mask.error_count();
    ev.causes = causes;
    ++trace_.victim.sent;
    if (lost_sync || header_hit(mask)) {
      ev.outcome = Outcome::Dropped;
      ++trace_.victim.dropped;
    } else if (mask.error_count() > 0) {
      ev.outcome = Outcome::Corrupted;
      ++trace_.victim.corrupted;
    } else {
      ev.outcome = Outcome::Clean;
      ++trace_.victim.clean;
    }
    trace_.events.push_back(ev);

    switch (ev.outcome) {
      case Outcome::Dropped:
        note_failure(v, attempt);
        break;
      case Outcome::Corrupted: {
        trace_.capture_histogram.add(ev.error_count);
        std::vector<std::uint8_t> bytes = v.payload;
        for (int i = 0; i < mask.length(); ++i) {
          if (mask.test(i)) bytes[static_cast<std::size_t>(i)] ^= 0xA5;
        }
        fim_.on_corrupted({kVictimStream, v.seq, std::move(bytes), ev.time_us});
        note_failure(v, attempt);
        break;
      }
      case Outcome::Clean: {
        const int matched = fim_.on_correct(kVictimStream, v.seq, v.payload);
        if (matched > 0) after_match(ev.time_us);
        break;
      }
    }
  }

  void note_failure(const Frame& v, int attempt) {
    if (!cfg_.arq.enabled || attempt >= cfg_.arq.max_attempts) return;
    retry_.push_back({v.seq, attempt, v.length_bytes, v.end_us()});
  }

  void log_classification(Micros t) {
    const auto& c = fim_.classification();
    const std::string label = c.label();
    if (label == last_label_) return;
    last_label_ = label;
    trace_.classifications.push_back({t, label, c.detail(), c.sample_count});
  }

  void after_match(Micros t) {
    log_classification(t);
    if (!cfg_.adapt.enabled) return;
    const auto result = policy(fim_.classification(), state_);
    if (!result.warning.empty() &&
        std::find(trace_.warnings.begin(), trace_.warnings.end(), result.warning) ==
            trace_.warnings.end()) {
      trace_.warnings.push_back(result.warning);
    }
    if (result.action.kind == ActionKind::None) return;
    state_ = apply(result.action, state_);
    trace_.actions.push_back(
        {t, result.action, fim_.classification().label(), fim_.matched_total()});
    fim_.reset_histogram();
    log_classification(t);
  }

  const ScenarioConfig& cfg_;
  LinkState state_;
  fim::FingerprintEngine fim_;
  Rng backoff_rng_;
  std::uint64_t payload_seed_;

  std::vector<StreamState> streams_;
  std::priority_queue<Attempt, std::vector<Attempt>, std::greater<>> heap_;
  std::uint64_t order_ = 0;
  Micros max_airtime_ = 0;

  std::deque<OnAir> air_;
  std::size_t air_offset_ = 0;
  std::deque<std::size_t> pending_victims_;
  std::deque<int> attempts_;
  std::vector<Frame> concurrent_;

  std::deque<Outstanding> retry_;
  std::uint16_t next_seq_ = 0;
  int current_attempt_ = 1;
  std::uint64_t victim_counter_ = 0;

  std::string last_label_ = "Unknown";
  SimTrace trace_;
};

}  // namespace

SimTrace run(const ScenarioConfig& scenario) {
  scenario.validate();
  Simulation sim(scenario);
  return sim.run();
}

}  // namespace coex
