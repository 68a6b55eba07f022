#include <doctest.h>

#include <cmath>
#include <deque>
#include <set>

#include "coex/fim.hpp"
#include "coex/rng.hpp"

using namespace coex;
using namespace coex::fim;

namespace {

QueuedPacket packet(int source, std::uint16_t seq, std::vector<std::uint8_t> bytes = {}) {
  return {source, seq, std::move(bytes), 0};
}

ErrorHistogram delta(int k, int n) {
  ErrorHistogram h;
  for (int i = 0; i < n; ++i) h.add(k);
  return h;
}

}  // namespace

TEST_CASE("queue push-out") {
  CorruptedPacketQueue q(16);
  q.push(packet(0, 0));
  CHECK(q.size() == 1);
  for (std::uint16_t s = 1; s <= 16; ++s) q.push(packet(0, s));
  CHECK(q.size() == 16);
  CHECK(q.evicted() == 1);
  CHECK(q.entries().front().seq == 1);
  CHECK(q.take(0, 0).empty());
  CHECK_THROWS(CorruptedPacketQueue(0));
}

TEST_CASE("duplicate identities are kept until matched") {
  CorruptedPacketQueue q(4);
  q.push(packet(1, 9, {1}));
  q.push(packet(1, 9, {2}));
  q.push(packet(2, 9, {3}));
  const auto got = q.take(1, 9);
  REQUIRE(got.size() == 2);
  CHECK(got[0].bytes[0] == 1);
  CHECK(got[1].bytes[0] == 2);
  CHECK(q.size() == 1);
}

TEST_CASE("queue matches a reference FIFO under fuzzed push/take") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(seed);
    const std::size_t cap = static_cast<std::size_t>(rng.uniform_int(1, 20));
    CorruptedPacketQueue q(cap);
    std::deque<std::pair<int, int>> ref;  // (seq, tag)
    int tag = 0;
    for (int op = 0; op < 400; ++op) {
      const auto seq = static_cast<std::uint16_t>(rng.uniform_int(0, 12));
      if (rng.bernoulli(0.65)) {
        q.push(packet(0, seq, {static_cast<std::uint8_t>(tag & 0xff)}));
        if (ref.size() == cap) ref.pop_front();
        ref.emplace_back(seq, tag++);
      } else {
        const auto got = q.take(0, seq);
        std::vector<int> want;
        for (auto it = ref.begin(); it != ref.end();) {
          if (it->first == seq) {
            want.push_back(it->second);
            it = ref.erase(it);
          } else {
            ++it;
          }
        }
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
          CHECK(got[i].bytes[0] == static_cast<std::uint8_t>(want[i] & 0xff));
        }
      }
      REQUIRE(q.size() == ref.size());
      CHECK(q.size() <= cap);
      for (std::size_t i = 0; i < ref.size(); ++i) {
        CHECK(q.entries()[i].seq == ref[i].first);
      }
    }
  }
}

TEST_CASE("diff_count") {
  std::vector<std::uint8_t> a(122, 7);
  CHECK(diff_count(a, a) == 0);
  auto b = a;
  b[3] = b[7] = b[9] = 0;
  CHECK(diff_count(b, a) == 3);
  CHECK(diff_count(a, b) == 3);
  std::vector<std::uint8_t> shorter(121, 7);
  CHECK_THROWS_AS(diff_count(shorter, a), std::domain_error);

  Rng rng(9);
  for (int c = 0; c < 500; ++c) {
    std::vector<std::uint8_t> x(122), y(122);
    for (std::size_t i = 0; i < 122; ++i) {
      x[i] = static_cast<std::uint8_t>(rng.next_u64());
      y[i] = rng.bernoulli(0.8) ? x[i] : static_cast<std::uint8_t>(rng.next_u64());
    }
    int ref = 0;
    for (std::size_t i = 0; i < 122; ++i) ref += x[i] != y[i] ? 1 : 0;
    CHECK(diff_count(x, y) == ref);
  }
}

TEST_CASE("histogram bounds and normalization") {
  ErrorHistogram h;
  CHECK(h.density(3) == 0.0);
  CHECK_THROWS(h.add(0));
  CHECK_THROWS(h.add(kMaxErrorLength + 1));

  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    ErrorHistogram g;
    const int n = static_cast<int>(rng.uniform_int(1, 3000));
    for (int i = 0; i < n; ++i) g.add(static_cast<int>(rng.uniform_int(1, kMaxErrorLength)));
    double sum = 0.0;
    for (double d : g.densities()) sum += d;
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    CHECK(g.total() == n);
  }
}

TEST_CASE("peak detection examples") {
  const auto peaks = detect_peaks(delta(11, 50));
  REQUIRE(peaks.size() == 1);
  CHECK(peaks[0].position == 11);
  // single-bin mass spreads over three smoothed bins
  CHECK(peaks[0].density == doctest::Approx(1.0 / 3.0));

  PeakParams raw;
  raw.smoothing_halfwidth = 0;
  const auto sharp = detect_peaks(delta(11, 50), raw);
  REQUIRE(sharp.size() == 1);
  CHECK(sharp[0].density == doctest::Approx(1.0));

  ErrorHistogram uniform;
  for (int k = 1; k <= kMaxErrorLength; ++k) uniform.add(k);
  CHECK(detect_peaks(uniform).empty());
  CHECK(detect_peaks(ErrorHistogram{}).empty());
}

TEST_CASE("peaks are sorted and satisfy density >= prominence >= 0") {
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    ErrorHistogram h;
    const int n = static_cast<int>(rng.uniform_int(20, 400));
    const int centre = static_cast<int>(rng.uniform_int(1, kMaxErrorLength));
    for (int i = 0; i < n; ++i) {
      const int k = rng.bernoulli(0.5) ? centre : static_cast<int>(rng.uniform_int(1, kMaxErrorLength));
      h.add(k);
    }
    const auto peaks = detect_peaks(h);
    for (std::size_t i = 0; i < peaks.size(); ++i) {
      CHECK(peaks[i].density >= peaks[i].prominence);
      CHECK(peaks[i].prominence >= 0.0);
      if (i) CHECK(peaks[i - 1].density >= peaks[i].density);
    }
  }
}

TEST_CASE("classification rules") {
  CHECK(classify(ErrorHistogram{}).verdict == Verdict::Unknown);
  CHECK(classify(delta(11, 19)).verdict == Verdict::Unknown);

  auto z = classify(delta(11, 40));
  CHECK(z.verdict == Verdict::ZigbeeHidden);
  CHECK(z.interferer_length_bytes == 16);
  CHECK(z.label() == "ZigbeeHidden(16)");

  ErrorHistogram saddle;
  for (int i = 0; i < 30; ++i) saddle.add(4);
  for (int i = 0; i < 30; ++i) saddle.add(27);
  CHECK(classify(saddle).verdict == Verdict::WifiControlData);

  CHECK(classify(delta(26, 30)).verdict == Verdict::WifiControlOnly);

  ErrorHistogram weak;
  const int steep[] = {400, 60, 16, 5, 2, 1};
  for (int k = 1; k <= 6; ++k) {
    for (int i = 0; i < steep[k - 1]; ++i) weak.add(k);
  }
  CHECK(classify(weak).verdict == Verdict::WeakLink);

  ErrorHistogram bt;
  for (int k = 1; k <= 121; ++k) bt.add(k);
  for (int k = 80; k <= 90; ++k) bt.add(k);
  CHECK(classify(bt).verdict == Verdict::Bluetooth);
}

TEST_CASE("classify is total and scale invariant over random histograms") {
  Rng rng(12345);
  std::set<Verdict> seen;
  for (int trial = 0; trial < 10'000; ++trial) {
    ErrorHistogram h;
    const int n = static_cast<int>(rng.uniform_int(0, 120));
    const int modes = static_cast<int>(rng.uniform_int(1, 3));
    std::vector<int> centres;
    for (int m = 0; m < modes; ++m) centres.push_back(static_cast<int>(rng.uniform_int(1, kMaxErrorLength)));
    for (int i = 0; i < n; ++i) {
      int k;
      if (rng.bernoulli(0.3)) {
        k = static_cast<int>(rng.uniform_int(1, kMaxErrorLength));
      } else {
        k = centres[static_cast<std::size_t>(rng.uniform_int(0, modes - 1))] +
            static_cast<int>(rng.uniform_int(-2, 2));
        k = std::clamp(k, 1, kMaxErrorLength);
      }
      h.add(k);
    }
    Classification c;
    REQUIRE_NOTHROW(c = classify(h));
    seen.insert(c.verdict);
    if (c.verdict != Verdict::Unknown) CHECK(c.sample_count >= 20);
    CHECK(classify(h).label() == c.label());

    if (h.total() >= 20) {
      ErrorHistogram doubled;
      for (int k = 1; k <= kMaxErrorLength; ++k) {
        for (std::int64_t i = 0; i < 2 * h.count(k); ++i) doubled.add(k);
      }
      CHECK(classify(doubled).label() == c.label());
    }
  }
  CHECK(seen.count(Verdict::Unknown) == 1);
  CHECK(seen.size() >= 4);
}

TEST_CASE("fingerprint engine matching") {
  FingerprintEngine fe(16);
  std::vector<std::uint8_t> good(122, 0x11);
  CHECK(fe.on_correct(0, 1, good) == 0);
  CHECK(fe.histogram().total() == 0);

  auto bad = good;
  for (int i = 20; i < 31; ++i) bad[static_cast<std::size_t>(i)] ^= 0xff;
  CHECK(fe.on_corrupted(packet(0, 1, bad)));
  CHECK(fe.on_correct(0, 1, good) == 1);
  CHECK(fe.histogram().count(11) == 1);

  auto bad2 = good;
  bad2[50] = 0;
  fe.on_corrupted(packet(0, 2, bad));
  fe.on_corrupted(packet(0, 2, bad2));
  CHECK(fe.on_correct(0, 2, good) == 2);
  CHECK(fe.histogram().count(11) == 2);
  CHECK(fe.histogram().count(1) == 1);
  CHECK(fe.histogram().total() == fe.matched_total());

  fe.reset_histogram();
  CHECK(fe.histogram().total() == 0);
  CHECK(fe.classification().verdict == Verdict::Unknown);
}
