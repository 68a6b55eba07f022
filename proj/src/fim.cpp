#include "coex/fim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace coex::fim {

CorruptedPacketQueue::CorruptedPacketQueue(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("queue capacity must be positive");
}

void CorruptedPacketQueue::push(QueuedPacket packet) {
  if (entries_.size() == capacity_) {
    entries_.pop_front();
    ++evicted_;
  }
  entries_.push_back(std::move(packet));
}

std::vector<QueuedPacket> CorruptedPacketQueue::take(int source_id, std::uint16_t seq) {
  std::vector<QueuedPacket> out;
  auto keep = std::stable_partition(entries_.begin(), entries_.end(), [&](const QueuedPacket& p) {
    return !(p.source_id == source_id && p.seq == seq);
  });
  std::move(keep, entries_.end(), std::back_inserter(out));
  entries_.erase(keep, entries_.end());
  return out;
}

void ErrorHistogram::add(int error_length) {
  if (error_length < 1 || error_length > kMaxErrorLength) {
    throw std::out_of_range("error length " + std::to_string(error_length) +
                            " outside 1.." + std::to_string(kMaxErrorLength));
  }
  ++counts_[static_cast<std::size_t>(error_length)];
  ++total_;
}

void ErrorHistogram::reset() {
  counts_.fill(0);
  total_ = 0;
}

std::int64_t ErrorHistogram::count(int error_length) const {
  if (error_length < 1 || error_length > kMaxErrorLength) return 0;
  return counts_[static_cast<std::size_t>(error_length)];
}

double ErrorHistogram::density(int error_length) const {
  if (total_ == 0) return 0.0;
  return static_cast<double>(count(error_length)) / static_cast<double>(total_);
}

std::vector<double> ErrorHistogram::densities() const {
  std::vector<double> out(kMaxErrorLength);
  for (int k = 1; k <= kMaxErrorLength; ++k) out[static_cast<std::size_t>(k - 1)] = density(k);
  return out;
}

void ErrorHistogram::write_csv(std::ostream& out) const {
  out << "error_len,count,density\n";
  for (int k = 1; k <= kMaxErrorLength; ++k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9f", density(k));
    out << k << ',' << count(k) << ',' << buf << '\n';
  }
}

int diff_count(std::span<const std::uint8_t> corrupted, std::span<const std::uint8_t> correct) {
  if (corrupted.size() != correct.size()) {
    throw std::domain_error("diff_count: length mismatch (" + std::to_string(corrupted.size()) +
                            " vs " + std::to_string(correct.size()) + ")");
  }
  return static_cast<int>(std::inner_product(corrupted.begin(), corrupted.end(), correct.begin(),
                                             std::size_t{0}, std::plus<>(),
                                             std::not_equal_to<>()));
}

std::vector<double> smooth(std::span<const double> density, int halfwidth) {
  const int n = static_cast<int>(density.size());
  std::vector<double> out(density.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - halfwidth);
    const int hi = std::min(n - 1, i + halfwidth);
    double sum = 0.0;
    for (int j = lo; j <= hi; ++j) sum += density[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = sum / (hi - lo + 1);
  }
  return out;
}

namespace {

constexpr double kTieEps = 1e-12;

bool same(double a, double b) { return std::abs(a - b) <= kTieEps; }

}  // namespace

std::vector<Peak> detect_peaks(const ErrorHistogram& histogram, const PeakParams& params) {
  std::vector<Peak> peaks;
  if (histogram.total() == 0) return peaks;
  const auto raw = histogram.densities();
  const auto s = smooth(raw, params.smoothing_halfwidth);
  const int n = static_cast<int>(s.size());

  int a = 0;
  while (a < n) {
    int b = a;
    while (b + 1 < n && same(s[static_cast<std::size_t>(b + 1)], s[static_cast<std::size_t>(a)])) {
      ++b;
    }
    const double h = s[static_cast<std::size_t>(a)];
    const bool has_left = a > 0;
    const bool has_right = b < n - 1;
    const bool left_lower = !has_left || s[static_cast<std::size_t>(a - 1)] < h;
    const bool right_lower = !has_right || s[static_cast<std::size_t>(b + 1)] < h;

    if ((has_left || has_right) && left_lower && right_lower && h >= params.min_density) {
      // Walk outward until something strictly higher (or the edge); the base
      // on each side is the lowest point crossed.
      double base = -1.0;
      if (has_left) {
        double m = h;
        for (int i = a - 1; i >= 0 && s[static_cast<std::size_t>(i)] <= h + kTieEps; --i) {
          m = std::min(m, s[static_cast<std::size_t>(i)]);
        }
        base = std::max(base, m);
      }
      if (has_right) {
        double m = h;
        for (int i = b + 1; i < n && s[static_cast<std::size_t>(i)] <= h + kTieEps; ++i) {
          m = std::min(m, s[static_cast<std::size_t>(i)]);
        }
        base = std::max(base, m);
      }
      const double prominence = h - base;
      if (prominence >= params.min_prominence) {
        // Smoothing can shift a narrow spike by a bin; report the largest raw
        // bin within reach of the smoothed plateau.
        const int lo = std::max(0, a - params.smoothing_halfwidth);
        const int hi = std::min(n - 1, b + params.smoothing_halfwidth);
        int pos = lo;
        for (int i = lo + 1; i <= hi; ++i) {
          if (raw[static_cast<std::size_t>(i)] > raw[static_cast<std::size_t>(pos)] + kTieEps) {
            pos = i;
          }
        }
        peaks.push_back({pos + 1, h, prominence});
      }
    }
    a = b + 1;
  }

  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& x, const Peak& y) {
    if (!same(x.density, y.density)) return x.density > y.density;
    return x.position < y.position;
  });
  return peaks;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::WeakLink: return "WeakLink";
    case Verdict::ZigbeeHidden: return "ZigbeeHidden";
    case Verdict::Bluetooth: return "Bluetooth";
    case Verdict::WifiControlOnly: return "WifiControlOnly";
    case Verdict::WifiControlData: return "WifiControlData";
    case Verdict::GenericCoexistence: return "GenericCoexistence";
    case Verdict::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::string Classification::label() const {
  if (verdict == Verdict::ZigbeeHidden) {
    return "ZigbeeHidden(" + std::to_string(interferer_length_bytes) + ")";
  }
  return to_string(verdict);
}

std::string Classification::detail() const {
  std::ostringstream os;
  os << "peaks=";
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    if (i) os << ';';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%d:%.4f", peaks[i].position, peaks[i].density);
    os << buf;
  }
  return os.str();
}

namespace {

bool in_range(int k, int lo, int hi) { return k >= lo && k <= hi; }

double mass(const std::vector<double>& raw, int lo, int hi) {
  double m = 0.0;
  for (int k = lo; k <= hi; ++k) m += raw[static_cast<std::size_t>(k - 1)];
  return m;
}

}  // namespace

Classification classify(const ErrorHistogram& histogram, const ClassifyParams& params) {
  Classification out;
  out.sample_count = histogram.total();
  if (histogram.total() < params.min_samples || histogram.total() == 0) return out;

  const auto raw = histogram.densities();
  out.peaks = detect_peaks(histogram, params.peaks);
  const auto& peaks = out.peaks;

  auto has_peak_in = [&](int lo, int hi) {
    return std::any_of(peaks.begin(), peaks.end(),
                       [&](const Peak& p) { return in_range(p.position, lo, hi); });
  };
  auto decide = [&](Verdict v, int length = 0) {
    out.verdict = v;
    out.interferer_length_bytes = length;
    return out;
  };

  // 1. horse saddle: short data bursts plus basic-rate control frames
  if (has_peak_in(2, 6) && has_peak_in(24, 30)) return decide(Verdict::WifiControlData);

  // 2. control frames alone
  if (peaks.size() == 1 && in_range(peaks.front().position, 24, 30)) {
    return decide(Verdict::WifiControlOnly);
  }

  // 3. flat, low densities with a raised 80..90 tail (multi-slot packets)
  {
    const bool all_low =
        std::all_of(raw.begin(), raw.end(), [](double d) { return d < 0.08; });
    const double tail = mass(raw, 80, 90);
    const double body_mean = mass(raw, 40, 79) / 40.0;
    if (all_low && tail > 0.0 && tail >= 2.0 * body_mean) return decide(Verdict::Bluetooth);
  }

  // 4. co-channel ZigBee: one long burst, 5 bytes shorter than the interferer
  if (!peaks.empty()) {
    const int k = peaks.front().position;
    if (k >= 7 && !in_range(k, 24, 30)) return decide(Verdict::ZigbeeHidden, k + 5);
  }

  const bool peak_at_one = std::any_of(peaks.begin(), peaks.end(),
                                       [](const Peak& p) { return p.position == 1; });

  // 5. coexistence of some kind: one-byte peak over a wide base
  if (peak_at_one && raw[0] >= 0.2 && mass(raw, 2, 20) >= 0.3) {
    return decide(Verdict::GenericCoexistence);
  }

  // 6. weak link: monotone decrease from a dominant one-byte bin
  {
    const auto s = smooth(raw, params.peaks.smoothing_halfwidth);
    bool monotone = true;
    for (int k = 1; k < 10; ++k) {
      if (s[static_cast<std::size_t>(k)] > s[static_cast<std::size_t>(k - 1)] + kTieEps) {
        monotone = false;
      }
    }
    const bool dominant = std::all_of(raw.begin() + 1, raw.end(),
                                      [&](double d) { return d <= raw[0]; });
    if (monotone && dominant && raw[0] > 0.0) return decide(Verdict::WeakLink);
  }

  return decide(Verdict::Unknown);
}

FingerprintEngine::FingerprintEngine(std::size_t queue_capacity, ClassifyParams params)
    : queue_(queue_capacity), params_(params) {}

bool FingerprintEngine::on_corrupted(QueuedPacket packet) {
  queue_.push(std::move(packet));
  return true;
}

int FingerprintEngine::on_correct(int source_id, std::uint16_t seq,
                                  std::span<const std::uint8_t> bytes) {
  auto matched = queue_.take(source_id, seq);
  int added = 0;
  for (const auto& m : matched) {
    if (m.bytes.size() != bytes.size()) continue;  // sent before a length change
    const int errors = diff_count(m.bytes, bytes);
    if (errors >= 1 && errors <= kMaxErrorLength) {
      histogram_.add(errors);
      ++added;
    }
  }
  matched_total_ += added;
  if (added > 0) last_ = classify(histogram_, params_);
  return static_cast<int>(matched.size());
}

void FingerprintEngine::reset_histogram() {
  histogram_.reset();
  last_ = Classification{};
}

}  // namespace coex::fim
