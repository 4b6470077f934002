#pragma once

#include <fftw3.h>

#include <mutex>
#include <optional>

#include "lumigroup/lightsig.hpp"

namespace lumigroup {

struct CycleSegmentation {
  std::vector<size_t> maxima;        // zeta: anchor indices, lag 0 included
  size_t mean_distance = 0;          // delta_mean, in samples
  std::vector<size_t> minima;        // mu
  std::vector<std::pair<size_t, size_t>> cycles;  // [begin, end) sample ranges
};

// Alternating (state, duration) runs; durations in integer microseconds.
struct PeriodList {
  struct Entry {
    bool on = false;
    std::int64_t duration_us = 0;
    friend bool operator==(const Entry&, const Entry&) = default;
  };
  std::vector<Entry> entries;
};

namespace cycledetect {

inline constexpr double kFlatFloorMv = 50.0;
inline constexpr double kFoldTolerance = 0.10;
inline constexpr size_t kMaximaMinSeparation = 10;

// Circular autocorrelation R(tau) = sum_k z[k] * z[(k+tau) mod n],
// computed as IFFT(|FFT(z)|^2). Full lag range [0, n).
inline std::vector<double> autocorrelation(const std::vector<double>& z) {
  size_t n = z.size();
  if (n < 2) fail(ErrorCode::EmptySignal, "autocorrelation needs >= 2 samples");

  static std::mutex plan_mutex;  // FFTW planning is not thread-safe
  std::vector<double> in(z);
  std::vector<double> out(n);
  size_t nc = n / 2 + 1;
  fftw_complex* freq = fftw_alloc_complex(nc);
  fftw_plan fwd, bwd;
  {
    std::lock_guard<std::mutex> lock(plan_mutex);
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), freq,
                               FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_1d(static_cast<int>(n), freq, out.data(),
                               FFTW_ESTIMATE);
  }
  fftw_execute(fwd);
  for (size_t i = 0; i < nc; ++i) {
    freq[i][0] = freq[i][0] * freq[i][0] + freq[i][1] * freq[i][1];
    freq[i][1] = 0.0;
  }
  fftw_execute(bwd);
  {
    std::lock_guard<std::mutex> lock(plan_mutex);
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  fftw_free(freq);
  for (auto& v : out) v /= static_cast<double>(n);
  return out;
}

// Strict local maxima of R over tau in [1, n-1] that reach half the
// peak over [1, n/2] and sit near a multiple of the dominant lag.
// Sub-period alignments of asymmetric duty cycles produce secondary
// maxima above the half-peak bar, so candidates off the dominant-lag
// grid are dropped. Maxima closer than kMaximaMinSeparation keep the
// larger. Lag 0 is prepended as the first anchor.
inline std::vector<size_t> autocorr_maxima(const std::vector<double>& r) {
  size_t n = r.size();
  // R decays smoothly from lag 0, so tiny lags dominate any plateau
  // signal. The period search starts past the first zero crossing.
  size_t start = 1;
  while (start < n / 2 && r[start] > 0.0) ++start;
  if (start >= n / 2) start = 1;
  size_t dominant = start;
  for (size_t t = start; t <= n / 2; ++t)
    if (r[t] > r[dominant]) dominant = t;
  // Circular wrap can push R(2P) a hair above R(P). If a sub-multiple
  // of the dominant lag also carries a near-peak value, that is the
  // fundamental.
  for (size_t m = 4; m >= 2; --m) {
    size_t center = dominant / m;
    if (center < 2 || center < start) continue;
    size_t radius = std::max<size_t>(2, dominant / (20 * m));
    size_t best = center;
    for (size_t t = center > radius ? center - radius : 1;
         t <= center + radius && t < n; ++t)
      if (r[t] > r[best]) best = t;
    if (r[best] >= 0.9 * r[dominant]) {
      dominant = best;
      break;
    }
  }
  double peak = r[dominant];
  double grid_tol = 0.15 * static_cast<double>(dominant);
  std::vector<size_t> cand;
  for (size_t t = 1; t + 1 < n; ++t) {
    if (!(r[t] > r[t - 1] && r[t] > r[t + 1] && r[t] >= 0.5 * peak)) continue;
    double k = std::round(static_cast<double>(t) / static_cast<double>(dominant));
    if (k < 1.0) continue;
    if (std::abs(static_cast<double>(t) - k * static_cast<double>(dominant)) >
        grid_tol)
      continue;
    cand.push_back(t);
  }
  std::vector<size_t> kept;
  for (size_t t : cand) {
    if (!kept.empty() && t - kept.back() < kMaximaMinSeparation) {
      if (r[t] > r[kept.back()]) kept.back() = t;
    } else {
      kept.push_back(t);
    }
  }
  std::vector<size_t> maxima{0};
  maxima.insert(maxima.end(), kept.begin(), kept.end());
  return maxima;
}

inline CycleSegmentation detect_cycles(const std::vector<double>& z) {
  // Mean removal keeps the DC component from drowning the period
  // peaks of R.
  std::vector<double> centered(z);
  double m = stats::mean(centered);
  for (auto& v : centered) v -= m;
  auto r = autocorrelation(centered);
  CycleSegmentation seg;
  seg.maxima = autocorr_maxima(r);
  if (seg.maxima.size() < 2)
    fail(ErrorCode::TooFewMaxima, "need >= 2 autocorrelation maxima");
  // A period peak can fail the strict-maximum test (plateaus, smearing),
  // leaving a double-width gap. Each gap is divided by the nearest
  // multiple of the first gap before averaging so a missing harmonic
  // does not inflate delta_mean.
  double first_gap = static_cast<double>(seg.maxima[1] - seg.maxima[0]);
  double gap_sum = 0.0;
  for (size_t i = 0; i + 1 < seg.maxima.size(); ++i) {
    double g = static_cast<double>(seg.maxima[i + 1] - seg.maxima[i]);
    double k = std::max(1.0, std::round(g / first_gap));
    gap_sum += g / k;
  }
  seg.mean_distance = static_cast<size_t>(
      std::ceil(gap_sum / static_cast<double>(seg.maxima.size() - 1)));
  // Anchor grid: multiples of delta_mean from lag 0. The detected
  // maxima are not used directly so a missing peak cannot drop a
  // minimum from the segmentation.
  std::vector<size_t> anchors{0};
  while (anchors.back() + seg.mean_distance + seg.mean_distance / 2 <
         z.size())
    anchors.push_back(anchors.back() + seg.mean_distance);
  for (size_t anchor : anchors) {
    size_t lo = anchor;
    size_t hi = std::min(anchor + seg.mean_distance, z.size() - 1);
    if (lo > hi) continue;
    size_t best = lo;
    for (size_t i = lo + 1; i <= hi; ++i)
      if (z[i] < z[best]) best = i;
    seg.minima.push_back(best);
  }
  std::sort(seg.minima.begin(), seg.minima.end());
  seg.minima.erase(std::unique(seg.minima.begin(), seg.minima.end()),
                   seg.minima.end());
  // Cycles are the spans between consecutive minima.
  for (size_t i = 0; i + 1 < seg.minima.size(); ++i)
    seg.cycles.emplace_back(seg.minima[i], seg.minima[i + 1]);
  return seg;
}

namespace detail {

// Greedy clustering of run durations within 10% of the smaller value;
// canonical duration per cluster is the member median, computed over
// interior runs so truncated window-boundary runs cannot bias it.
inline std::vector<std::int64_t> vocabulary_durations(
    const std::vector<PeriodList::Entry>& runs) {
  std::vector<double> durations;
  size_t first = runs.size() > 3 ? 1 : 0;
  size_t last = runs.size() > 3 ? runs.size() - 1 : runs.size();
  for (size_t i = first; i < last; ++i)
    durations.push_back(static_cast<double>(runs[i].duration_us));
  std::sort(durations.begin(), durations.end());
  std::vector<std::vector<double>> clusters;
  for (double d : durations) {
    if (!clusters.empty() &&
        d - clusters.back().front() <
            kFoldTolerance * clusters.back().front()) {
      clusters.back().push_back(d);
    } else {
      clusters.push_back({d});
    }
  }
  std::vector<std::int64_t> canon;
  for (auto& c : clusters)
    canon.push_back(static_cast<std::int64_t>(std::llround(stats::median(c))));
  return canon;
}

}  // namespace detail

// Thresholds the signal at the midpoint of its robust (5th/95th
// percentile) range, run-length encodes it, and snaps run durations to
// the 10%-merged duration vocabulary.
inline PeriodList extract_period_list(const RawLightSignal& signal,
                                      double flat_floor_mv = kFlatFloorMv) {
  if (signal.size() == 0) fail(ErrorCode::EmptySignal, "empty signal");
  double lo = stats::quantile(signal.voltage_mv, 0.05);
  double hi = stats::quantile(signal.voltage_mv, 0.95);
  if (hi - lo < flat_floor_mv)
    fail(ErrorCode::FlatSignal, "signal dynamic range below floor");
  double threshold = 0.5 * (lo + hi);

  PeriodList runs;
  bool cur = signal.voltage_mv[0] >= threshold;
  std::int64_t len = 0;
  for (double v : signal.voltage_mv) {
    bool on = v >= threshold;
    if (on == cur) {
      ++len;
    } else {
      runs.entries.push_back({cur, len * signal.sampling_interval_us});
      cur = on;
      len = 1;
    }
  }
  runs.entries.push_back({cur, len * signal.sampling_interval_us});

  auto vocab = detail::vocabulary_durations(runs.entries);
  for (auto& e : runs.entries) {
    std::int64_t best = 0;
    std::int64_t best_gap = 0;
    for (std::int64_t c : vocab) {
      std::int64_t gap = std::abs(e.duration_us - c);
      if (best == 0 || gap < best_gap) {
        best = c;
        best_gap = gap;
      }
    }
    if (best != 0 &&
        static_cast<double>(best_gap) <
            kFoldTolerance * static_cast<double>(std::min(e.duration_us, best)))
      e.duration_us = best;
  }
  return runs;
}

namespace detail {

inline bool durations_close(std::int64_t a, std::int64_t b) {
  double lo = static_cast<double>(std::min(a, b));
  return std::abs(static_cast<double>(a - b)) < kFoldTolerance * lo;
}

// Does runs[i] == runs[i+unit] hold (state and duration) for the whole
// span, with the unit appearing at least twice?
inline bool tiles(const std::vector<PeriodList::Entry>& runs, size_t unit) {
  if (runs.size() < 2 * unit) return false;
  for (size_t i = 0; i + unit < runs.size(); ++i) {
    if (runs[i].on != runs[i + unit].on) return false;
    if (!durations_close(runs[i].duration_us, runs[i + unit].duration_us))
      return false;
  }
  return true;
}

inline std::optional<LightPattern> fold_runs(
    const std::vector<PeriodList::Entry>& runs, size_t unit) {
  if (!tiles(runs, unit)) return std::nullopt;
  LightPattern p;
  for (size_t j = 0; j < unit; ++j) {
    std::vector<double> ds;
    for (size_t i = j; i < runs.size(); i += unit)
      ds.push_back(static_cast<double>(runs[i].duration_us));
    p.periods.push_back({runs[j].on, stats::median(ds) / 1000.0});
  }
  // Alternation must hold and the unit must be rotatable to start on.
  for (size_t j = 0; j < p.periods.size(); ++j)
    if (p.periods[j].on == p.periods[(j + 1) % p.periods.size()].on)
      return std::nullopt;
  if (!p.periods.front().on)
    std::rotate(p.periods.begin(), p.periods.begin() + 1, p.periods.end());
  return lightsig::canonical_rotation(p);
}

}  // namespace detail

inline constexpr size_t kUnknownLength = 0;

// Shortest repeating even unit of the period list. Window-boundary
// runs may be truncated, so trimming none/both/first/last is attempted
// for each candidate unit length.
inline LightPattern fold_to_pattern(const PeriodList& periods,
                                    size_t expected_length = kUnknownLength) {
  const auto& runs = periods.entries;
  if (runs.empty()) fail(ErrorCode::NoRepetition, "empty period list");
  size_t max_unit = runs.size() / 2;
  for (size_t unit = 2; unit <= max_unit; unit += 2) {
    if (expected_length != kUnknownLength && unit != expected_length) continue;
    struct Trim {
      size_t front, back;
    };
    for (Trim t : {Trim{0, 0}, Trim{1, 1}, Trim{1, 0}, Trim{0, 1}}) {
      if (runs.size() < t.front + t.back + 2 * unit) continue;
      std::vector<PeriodList::Entry> body(runs.begin() + t.front,
                                          runs.end() - t.back);
      if (auto p = detail::fold_runs(body, unit)) return *p;
    }
  }
  fail(ErrorCode::NoRepetition, "no unit tiles the period list >= 2 times");
}

// Valid means: one shared length in {2,4,6,8,10} and every phase
// longer than 1 ms.
inline bool validate_patterns(const std::vector<LightPattern>& patterns) {
  if (patterns.empty()) return false;
  size_t len = patterns.front().length();
  if (len < 2 || len > 10 || len % 2 != 0) return false;
  for (const auto& p : patterns) {
    if (p.length() != len) return false;
    for (const auto& per : p.periods)
      if (per.duration_ms <= 1.0) return false;
  }
  return true;
}

// One validity probe of a window: fold succeeds, the window carries at
// least two complete instances with margin (2L+2 interior runs), and
// every segmented instance validates.
inline bool window_recovers_pattern(const LightPattern& pattern,
                                    double window_ms, double offset_ms,
                                    Rng& rng) {
  auto signal = lightsig::synthesize_signal(
      pattern, window_ms, offset_ms, lightsig::kDefaultVOnMv,
      lightsig::kDefaultVOffMv, 0.0, rng);
  PeriodList runs;
  try {
    runs = extract_period_list(signal);
  } catch (const Error&) {
    return false;
  }
  LightPattern folded;
  try {
    folded = fold_to_pattern(runs);
  } catch (const Error&) {
    return false;
  }
  size_t unit = folded.length();
  // First and last runs border the window and are unreliable.
  if (runs.entries.size() < 2 * unit + 4) return false;
  std::vector<PeriodList::Entry> body(runs.entries.begin() + 1,
                                      runs.entries.end() - 1);
  std::vector<LightPattern> instances;
  for (size_t i = 0; i + unit <= body.size(); i += unit) {
    LightPattern inst;
    for (size_t j = 0; j < unit; ++j)
      inst.periods.push_back(
          {body[i + j].on,
           static_cast<double>(body[i + j].duration_us) / 1000.0});
    instances.push_back(inst);
  }
  if (instances.size() < 2) return false;
  return validate_patterns(instances);
}

// Smallest window, on a 0.25x grid from 1x the pattern duration, at
// which extraction validates; a fresh random start offset per probe.
inline double minimal_sampling_window(const LightPattern& pattern, Rng& rng,
                                      double max_factor = 8.0) {
  double duration = pattern.duration_ms();
  std::uniform_real_distribution<double> offset(0.0, duration);
  for (double factor = 1.0; factor <= max_factor + 1e-9; factor += 0.25) {
    if (window_recovers_pattern(pattern, factor * duration, offset(rng), rng))
      return factor * duration;
  }
  fail(ErrorCode::NotFound, "no window up to max_factor validates");
}

}  // namespace cycledetect
}  // namespace lumigroup
