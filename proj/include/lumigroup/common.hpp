#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace lumigroup {

using Rng = std::mt19937_64;

enum class ErrorCode {
  InvalidLength,
  InvalidWindow,
  InvalidLevels,
  InvalidRate,
  EmptySignal,
  TooFewMaxima,
  FlatSignal,
  NoRepetition,
  NotFound,
  EmptyInput,
  TooShort,
  DegenerateLabels,
  DegenerateDataset,
  TooFewPoints,
  KindMismatch,
  NoProfiles,
  DuplicateId,
  UnknownClient,
  MissingPayload,
  BadType,
  LengthMismatch,
  Truncated,
  ConfigInvalid,
  UniverseMismatch,
  UnknownDevice,
  TooEarly,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

namespace stats {

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Population variance.
inline double variance(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

inline double stddev(const std::vector<double>& v) {
  return std::sqrt(variance(v));
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Linear-interpolated quantile, q in [0,1].
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  double pos = q * static_cast<double>(v.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(pos));
  size_t hi = static_cast<size_t>(std::ceil(pos));
  double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

// Pearson r over equal-length vectors; sets *degenerate when either
// input has zero variance (result is then 0).
inline double pearson(const std::vector<double>& a,
                      const std::vector<double>& b,
                      bool* degenerate = nullptr) {
  if (degenerate) *degenerate = false;
  size_t n = a.size();
  if (n < 2 || b.size() != n) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return sab / std::sqrt(saa * sbb);
}

// Ranks with average ties.
inline std::vector<double> ranks(const std::vector<double>& v) {
  size_t n = v.size();
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](size_t i, size_t j) { return v[i] < v[j]; });
  std::vector<double> r(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace stats
}  // namespace lumigroup
