#include <catch2/catch_amalgamated.hpp>

#include "lumigroup/cycledetect.hpp"

using namespace lumigroup;
using namespace lumigroup::cycledetect;

namespace {

// Independent O(n^2) circular autocorrelation.
std::vector<double> direct_autocorr(const std::vector<double>& z) {
  size_t n = z.size();
  std::vector<double> r(n, 0.0);
  for (size_t tau = 0; tau < n; ++tau)
    for (size_t k = 0; k < n; ++k) r[tau] += z[k] * z[(k + tau) % n];
  return r;
}

}  // namespace

TEST_CASE("autocorrelation of a constant input") {
  std::vector<double> z(8, 3.0);
  auto r = autocorrelation(z);
  REQUIRE(r.size() == 8);
  for (double v : r) CHECK(v == Catch::Approx(9.0 * 8.0).epsilon(1e-12));
}

TEST_CASE("autocorrelation rejects tiny input") {
  CHECK_THROWS_AS(autocorrelation({1.0}), Error);
}

TEST_CASE("FFT autocorrelation matches the direct sum") {
  Rng rng(99);
  std::uniform_int_distribution<size_t> len(2, 4096);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> z(len(rng));
    for (auto& v : z) v = val(rng);
    auto fast = autocorrelation(z);
    auto slow = direct_autocorr(z);
    double scale = std::abs(slow[0]) + 1e-30;
    for (size_t i = 0; i < z.size(); ++i)
      REQUIRE(std::abs(fast[i] - slow[i]) / scale < 1e-9);
  }
}

TEST_CASE("square wave autocorrelation peaks at period multiples") {
  // Period 40 samples, 4 repetitions.
  std::vector<double> z;
  for (int rep = 0; rep < 4; ++rep) {
    for (int i = 0; i < 20; ++i) z.push_back(1.0);
    for (int i = 0; i < 20; ++i) z.push_back(-1.0);
  }
  auto r = autocorrelation(z);
  size_t best = 1;
  for (size_t t = 1; t <= z.size() / 2; ++t)
    if (r[t] > r[best]) best = t;
  CHECK(best % 40 == 0);
}

TEST_CASE("detect_cycles on a noiseless synthesized signal") {
  for (unsigned seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    auto p = lightsig::generate_pattern(4, rng);
    auto s = lightsig::synthesize_signal(p, 4.0 * p.duration_ms(), 0.0, 3300,
                                         100, 0.0, rng);
    auto seg = detect_cycles(s.voltage_mv);
    REQUIRE(seg.cycles.size() >= 3);
    size_t expect = static_cast<size_t>(p.duration_ms() * 1000.0 / 20.0);
    std::vector<double> lens;
    for (auto [b, e] : seg.cycles) lens.push_back(static_cast<double>(e - b));
    double med = stats::median(lens);
    CHECK(std::abs(med - static_cast<double>(expect)) <= 2.0);
    CHECK(std::abs(static_cast<double>(seg.mean_distance) -
                   static_cast<double>(expect)) <= 2.0);
  }
}

TEST_CASE("detect_cycles segmentation invariants") {
  Rng rng(17);
  auto p = lightsig::generate_pattern(6, rng);
  auto s = lightsig::synthesize_signal(p, 5.0 * p.duration_ms(), 1.0, 3300,
                                       100, 0.0, rng);
  auto seg = detect_cycles(s.voltage_mv);
  for (size_t i = 1; i < seg.maxima.size(); ++i)
    REQUIRE(seg.maxima[i] > seg.maxima[i - 1]);
  for (size_t i = 1; i < seg.minima.size(); ++i)
    REQUIRE(seg.minima[i] > seg.minima[i - 1]);
  for (size_t i = 1; i < seg.cycles.size(); ++i)
    REQUIRE(seg.cycles[i].first == seg.cycles[i - 1].second);
}

TEST_CASE("extract_period_list exact run-length encoding") {
  LightPattern p{{{true, 2.0}, {false, 3.0}}};
  Rng rng(0);
  auto s = lightsig::synthesize_signal(p, 5.0, 0.0, 3300, 100, 0.0, rng);
  auto runs = extract_period_list(s);
  REQUIRE(runs.entries.size() == 2);
  CHECK(runs.entries[0].on);
  CHECK(std::abs(runs.entries[0].duration_us - 2000) <= 20);
  CHECK_FALSE(runs.entries[1].on);
  CHECK(std::abs(runs.entries[1].duration_us - 3000) <= 20);
}

TEST_CASE("extract_period_list merges runs within 10%") {
  LightPattern p{{{true, 2.0}, {false, 3.0}, {true, 2.1}, {false, 3.6}}};
  Rng rng(0);
  auto s = lightsig::synthesize_signal(p, 2.0 * p.duration_ms(), 0.0, 3300,
                                       100, 0.0, rng);
  auto runs = extract_period_list(s);
  // The 2.0 and 2.1 ms on-runs collapse to one vocabulary duration.
  std::vector<std::int64_t> on_durations;
  for (const auto& e : runs.entries)
    if (e.on) on_durations.push_back(e.duration_us);
  REQUIRE(on_durations.size() >= 3);
  for (size_t i = 1; i + 1 < on_durations.size(); ++i)
    CHECK(on_durations[i] == on_durations[1]);
}

TEST_CASE("extract_period_list flags flat signals") {
  RawLightSignal s;
  s.voltage_mv.assign(500, 1000.0);
  for (size_t i = 0; i < s.voltage_mv.size(); i += 2) s.voltage_mv[i] += 10.0;
  CHECK_THROWS_AS(extract_period_list(s), Error);
}

TEST_CASE("fold_to_pattern shortest unit") {
  PeriodList ab;
  for (int i = 0; i < 3; ++i) {
    ab.entries.push_back({true, 2000});
    ab.entries.push_back({false, 3000});
  }
  auto p = fold_to_pattern(ab);
  REQUIRE(p.length() == 2);
  CHECK(p.periods[0].duration_ms == Catch::Approx(2.0));
  CHECK(p.periods[1].duration_ms == Catch::Approx(3.0));

  PeriodList abcd;
  for (int i = 0; i < 2; ++i) {
    abcd.entries.push_back({true, 2000});
    abcd.entries.push_back({false, 3000});
    abcd.entries.push_back({true, 4000});
    abcd.entries.push_back({false, 1500});
  }
  auto q = fold_to_pattern(abcd);
  REQUIRE(q.length() == 4);

  PeriodList abx;
  abx.entries.push_back({true, 2000});
  abx.entries.push_back({false, 3000});
  abx.entries.push_back({true, 4400});
  CHECK_THROWS_AS(fold_to_pattern(abx), Error);
}

TEST_CASE("pattern recovery across offsets and lengths") {
  for (int length : {2, 4, 6, 8, 10}) {
    for (unsigned seed = 0; seed < 4; ++seed) {
      Rng rng(seed * 100 + static_cast<unsigned>(length));
      auto p = lightsig::generate_pattern(length, rng);
      std::uniform_real_distribution<double> off(0.0, p.duration_ms());
      for (int trial = 0; trial < 5; ++trial) {
        double offset = off(rng);
        auto s = lightsig::synthesize_signal(p, 4.5 * p.duration_ms(), offset,
                                             3300, 100, 0.0, rng);
        auto folded = fold_to_pattern(extract_period_list(s));
        INFO("length " << length << " seed " << seed << " offset " << offset);
        REQUIRE(lightsig::patterns_equivalent(p, folded, 0.021));
      }
    }
  }
}

TEST_CASE("validate_patterns rules") {
  Rng rng(1);
  auto a = lightsig::generate_pattern(4, rng);
  auto b = lightsig::generate_pattern(4, rng);
  CHECK(validate_patterns({a, b}));
  auto c = lightsig::generate_pattern(6, rng);
  CHECK_FALSE(validate_patterns({a, c}));
  LightPattern bad = a;
  bad.periods[1].duration_ms = 0.8;
  CHECK_FALSE(validate_patterns({bad}));
  CHECK_FALSE(validate_patterns({}));
}

TEST_CASE("window equal to one pattern duration fails validation") {
  Rng rng(21);
  auto p = lightsig::generate_pattern(4, rng);
  CHECK_FALSE(window_recovers_pattern(p, p.duration_ms(), 1.0, rng));
}

TEST_CASE("minimal sampling window lands near three pattern durations") {
  std::vector<double> ratios;
  for (int length : {2, 4, 6, 8, 10}) {
    for (unsigned seed = 0; seed < 10; ++seed) {
      Rng rng(seed * 31 + static_cast<unsigned>(length));
      auto p = lightsig::generate_pattern(length, rng);
      double w = minimal_sampling_window(p, rng);
      ratios.push_back(w / p.duration_ms());
    }
  }
  double m = stats::mean(ratios);
  CHECK(m >= 2.5);
  CHECK(m <= 4.0);
}
