#pragma once

#include <fstream>
#include <sstream>

#include "lumigroup/common.hpp"

namespace lumigroup {

struct Period {
  bool on = false;
  double duration_ms = 0.0;
  friend bool operator==(const Period&, const Period&) = default;
};

// Alternating on/off periods, first period on. Acts as the
// location-bound nonce a bulb broadcasts.
struct LightPattern {
  std::vector<Period> periods;

  double duration_ms() const {
    double d = 0.0;
    for (const auto& p : periods) d += p.duration_ms;
    return d;
  }
  size_t length() const { return periods.size(); }
  friend bool operator==(const LightPattern&, const LightPattern&) = default;
};

struct RawLightSignal {
  std::vector<double> voltage_mv;
  std::int64_t start_us = 0;
  std::int32_t sampling_interval_us = 20;

  size_t size() const { return voltage_mv.size(); }
  std::int64_t t_us(size_t i) const {
    return start_us + static_cast<std::int64_t>(i) * sampling_interval_us;
  }
  friend bool operator==(const RawLightSignal&, const RawLightSignal&) = default;
};

namespace lightsig {

inline constexpr double kMinDurationMs = 1.1;
inline constexpr double kMaxDurationMs = 5.0;
inline constexpr double kDistinctMargin = 0.10;
inline constexpr double kDefaultVOnMv = 3300.0;
inline constexpr double kDefaultVOffMv = 100.0;
inline constexpr double kDefaultNoiseStdMv = 15.0;

inline bool durations_distinct(const std::vector<double>& d) {
  for (size_t i = 0; i < d.size(); ++i)
    for (size_t j = i + 1; j < d.size(); ++j) {
      double lo = std::min(d[i], d[j]);
      if (std::abs(d[i] - d[j]) < kDistinctMargin * lo) return false;
    }
  return true;
}

// Random alternating on/off pattern with every pair of durations at
// least 10% apart relative to the smaller one. Durations are drawn
// sorted with a minimum gap of 10% + kQuantGuardMs (so 20 us receiver
// quantization cannot erode the margin below the 10% merge tolerance)
// and then shuffled.
inline constexpr double kQuantGuardMs = 0.05;

inline LightPattern generate_pattern(int length, Rng& rng) {
  if (length < 2 || length > 10 || length % 2 != 0)
    fail(ErrorCode::InvalidLength,
         "pattern length must be even and in {2,4,6,8,10}");
  size_t n = static_cast<size_t>(length);
  // Backward recursion: largest value position i may take so the
  // remaining min-gap chain still fits under kMaxDurationMs.
  std::vector<double> upper(n);
  upper[n - 1] = kMaxDurationMs;
  for (size_t i = n - 1; i-- > 0;)
    upper[i] = (upper[i + 1] - kQuantGuardMs) / (1.0 + kDistinctMargin);
  std::vector<double> d(n);
  double lo = kMinDurationMs;
  for (size_t i = 0; i < n; ++i) {
    std::uniform_real_distribution<double> dur(lo, upper[i]);
    d[i] = dur(rng);
    lo = d[i] * (1.0 + kDistinctMargin) + kQuantGuardMs;
  }
  std::shuffle(d.begin(), d.end(), rng);
  LightPattern p;
  p.periods.reserve(d.size());
  for (size_t i = 0; i < d.size(); ++i)
    p.periods.push_back({i % 2 == 0, d[i]});
  return p;
}

// Level of the periodic pattern extension at time t_ms >= 0.
inline bool pattern_level_at(const LightPattern& p, double t_ms) {
  double total = p.duration_ms();
  double t = std::fmod(t_ms, total);
  for (const auto& per : p.periods) {
    if (t < per.duration_ms) return per.on;
    t -= per.duration_ms;
  }
  return p.periods.back().on;
}

// Periodic extension of the pattern, shifted by start_offset_ms,
// sampled every sampling_interval_us with additive Gaussian noise.
inline RawLightSignal synthesize_signal(const LightPattern& pattern,
                                        double window_ms,
                                        double start_offset_ms, double v_on,
                                        double v_off, double noise_std,
                                        Rng& rng,
                                        std::int32_t sampling_interval_us = 20) {
  if (window_ms <= 0.0) fail(ErrorCode::InvalidWindow, "window_ms must be > 0");
  if (v_on <= v_off) fail(ErrorCode::InvalidLevels, "v_on must exceed v_off");
  RawLightSignal s;
  s.sampling_interval_us = sampling_interval_us;
  s.start_us = static_cast<std::int64_t>(std::llround(start_offset_ms * 1000.0));
  size_t n = static_cast<size_t>(window_ms * 1000.0 /
                                 static_cast<double>(sampling_interval_us));
  s.voltage_mv.reserve(n);
  std::normal_distribution<double> noise(0.0, noise_std);
  double step_ms = static_cast<double>(sampling_interval_us) / 1000.0;
  for (size_t i = 0; i < n; ++i) {
    double t = start_offset_ms + static_cast<double>(i) * step_ms;
    double v = pattern_level_at(pattern, t) ? v_on : v_off;
    if (noise_std > 0.0) v += noise(rng);
    s.voltage_mv.push_back(v);
  }
  return s;
}

// Replaces a uniformly chosen fraction `rate` of samples with white
// noise spanning [min - 3*std, max + 3*std] of the input. rate=0
// returns the input unchanged.
inline RawLightSignal distort_signal(const RawLightSignal& signal, double rate,
                                     Rng& rng) {
  if (rate < 0.0 || rate > 1.0)
    fail(ErrorCode::InvalidRate, "distortion rate must be in [0,1]");
  RawLightSignal out = signal;
  if (rate == 0.0 || signal.size() == 0) return out;
  double sd = stats::stddev(signal.voltage_mv);
  double lo = *std::min_element(signal.voltage_mv.begin(),
                                signal.voltage_mv.end()) -
              3.0 * sd;
  double hi = *std::max_element(signal.voltage_mv.begin(),
                                signal.voltage_mv.end()) +
              3.0 * sd;
  size_t n = signal.size();
  size_t k = static_cast<size_t>(std::llround(rate * static_cast<double>(n)));
  // Partial Fisher-Yates picks k distinct indices.
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  std::uniform_real_distribution<double> noise(lo, hi);
  for (size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
    out.voltage_mv[idx[i]] = noise(rng);
  }
  return out;
}

// Cyclic rotation by an even number of periods that is
// lexicographically smallest in durations. Periodic emission makes a
// pattern observable only up to such rotations, so recovered patterns
// are compared in this form.
inline LightPattern canonical_rotation(const LightPattern& p) {
  size_t n = p.periods.size();
  if (n < 4) return p;
  auto rotate_by = [&](size_t shift) {
    LightPattern r;
    r.periods.reserve(n);
    for (size_t i = 0; i < n; ++i) r.periods.push_back(p.periods[(i + shift) % n]);
    return r;
  };
  LightPattern best = p;
  for (size_t shift = 2; shift < n; shift += 2) {
    LightPattern cand = rotate_by(shift);
    for (size_t i = 0; i < n; ++i) {
      if (cand.periods[i].duration_ms < best.periods[i].duration_ms) {
        best = cand;
        break;
      }
      if (cand.periods[i].duration_ms > best.periods[i].duration_ms) break;
    }
  }
  return best;
}

inline bool patterns_equivalent(const LightPattern& a, const LightPattern& b,
                                double tol_ms) {
  if (a.periods.size() != b.periods.size()) return false;
  LightPattern ca = canonical_rotation(a);
  LightPattern cb = canonical_rotation(b);
  for (size_t i = 0; i < ca.periods.size(); ++i) {
    if (ca.periods[i].on != cb.periods[i].on) return false;
    if (std::abs(ca.periods[i].duration_ms - cb.periods[i].duration_ms) > tol_ms)
      return false;
  }
  return true;
}

// --- file formats ---

inline void write_signal_csv(const RawLightSignal& s, std::ostream& os) {
  os << "t_us,voltage_mv\n";
  for (size_t i = 0; i < s.size(); ++i)
    os << s.t_us(i) << "," << s.voltage_mv[i] << "\n";
}

inline RawLightSignal read_signal_csv(std::istream& is) {
  RawLightSignal s;
  std::string line;
  if (!std::getline(is, line)) fail(ErrorCode::IoError, "empty signal file");
  std::vector<std::int64_t> ts;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      fail(ErrorCode::IoError, "malformed signal row: " + line);
    ts.push_back(std::stoll(line.substr(0, comma)));
    s.voltage_mv.push_back(std::stod(line.substr(comma + 1)));
  }
  if (ts.size() >= 2) {
    s.start_us = ts[0];
    s.sampling_interval_us = static_cast<std::int32_t>(ts[1] - ts[0]);
  }
  return s;
}

inline void write_pattern_csv(const LightPattern& p, std::ostream& os) {
  os << "state,duration_ms\n";
  for (const auto& per : p.periods)
    os << (per.on ? 1 : 0) << "," << per.duration_ms << "\n";
}

inline LightPattern read_pattern_csv(std::istream& is) {
  LightPattern p;
  std::string line;
  if (!std::getline(is, line)) fail(ErrorCode::IoError, "empty pattern file");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      fail(ErrorCode::IoError, "malformed pattern row: " + line);
    p.periods.push_back({line.substr(0, comma) == "1",
                         std::stod(line.substr(comma + 1))});
  }
  return p;
}

}  // namespace lightsig
}  // namespace lumigroup
