#pragma once

#include <fftw3.h>

#include <chrono>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>

#include "lumigroup/common.hpp"

namespace lumigroup {

struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> runtimes_us;
  std::vector<bool> missing;  // true: value undefined, reported as 0

  size_t size() const { return names.size(); }
  double value(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return values[i];
    fail(ErrorCode::NotFound, "unknown feature: " + name);
  }
  bool is_missing(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return missing[i];
    fail(ErrorCode::NotFound, "unknown feature: " + name);
  }
};

namespace tsfeatures {

namespace detail {

struct Builder {
  FeatureVector out;

  // Records one feature with its own wall time. A NaN value is stored
  // as 0 with the missing flag set so downstream matrices stay finite.
  void add(const std::string& name, const std::function<double()>& compute) {
    auto t0 = std::chrono::steady_clock::now();
    double v = compute();
    auto t1 = std::chrono::steady_clock::now();
    bool miss = !std::isfinite(v);
    out.names.push_back(name);
    out.values.push_back(miss ? 0.0 : v);
    out.missing.push_back(miss);
    out.runtimes_us.push_back(
        std::chrono::duration<double, std::micro>(t1 - t0).count());
  }
};

inline double skewness(const std::vector<double>& z) {
  double m = stats::mean(z), sd = stats::stddev(z);
  if (sd <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : z) s += std::pow((x - m) / sd, 3.0);
  return s / static_cast<double>(z.size());
}

inline double kurtosis(const std::vector<double>& z) {
  double m = stats::mean(z), sd = stats::stddev(z);
  if (sd <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : z) s += std::pow((x - m) / sd, 4.0);
  return s / static_cast<double>(z.size());
}

inline double autocorr_at(const std::vector<double>& z, size_t lag) {
  size_t n = z.size();
  if (lag >= n) return std::numeric_limits<double>::quiet_NaN();
  double m = stats::mean(z);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < n; ++i) den += (z[i] - m) * (z[i] - m);
  if (den <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  for (size_t i = 0; i + lag < n; ++i) num += (z[i] - m) * (z[i + lag] - m);
  return num / den;
}

// Fraction of non-DC spectral energy in 4 equal frequency bands.
inline std::vector<double> band_energy(const std::vector<double>& z) {
  static std::mutex plan_mutex;
  size_t n = z.size();
  size_t nc = n / 2 + 1;
  std::vector<double> in(z);
  fftw_complex* freq = fftw_alloc_complex(nc);
  fftw_plan fwd;
  {
    std::lock_guard<std::mutex> lock(plan_mutex);
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), freq,
                               FFTW_ESTIMATE);
  }
  fftw_execute(fwd);
  std::vector<double> power(nc);
  for (size_t i = 0; i < nc; ++i)
    power[i] = freq[i][0] * freq[i][0] + freq[i][1] * freq[i][1];
  {
    std::lock_guard<std::mutex> lock(plan_mutex);
    fftw_destroy_plan(fwd);
  }
  fftw_free(freq);
  double total = 0.0;
  for (size_t i = 1; i < nc; ++i) total += power[i];
  std::vector<double> bands(4, 0.0);
  if (total <= 0.0)
    return {std::numeric_limits<double>::quiet_NaN(),
            std::numeric_limits<double>::quiet_NaN(),
            std::numeric_limits<double>::quiet_NaN(),
            std::numeric_limits<double>::quiet_NaN()};
  for (size_t i = 1; i < nc; ++i) {
    size_t band = std::min<size_t>(3, 4 * (i - 1) / (nc - 1));
    bands[band] += power[i];
  }
  for (auto& b : bands) b /= total;
  return bands;
}

inline double trend_slope(const std::vector<double>& z) {
  size_t n = z.size();
  double mx = 0.5 * static_cast<double>(n - 1);
  double my = stats::mean(z);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double dx = static_cast<double>(i) - mx;
    num += dx * (z[i] - my);
    den += dx * dx;
  }
  return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

// The fixed 10-feature statistical set, declared order.
inline FeatureVector statistical_features(const std::vector<double>& z) {
  if (z.size() < 2)
    fail(ErrorCode::TooShort, "statistical_features needs >= 2 samples");
  detail::Builder b;
  b.add("mean", [&] { return stats::mean(z); });
  b.add("variance", [&] { return stats::variance(z); });
  b.add("std", [&] { return stats::stddev(z); });
  b.add("min", [&] { return *std::min_element(z.begin(), z.end()); });
  b.add("max", [&] { return *std::max_element(z.begin(), z.end()); });
  b.add("median", [&] { return stats::median(z); });
  b.add("length", [&] { return static_cast<double>(z.size()); });
  b.add("skewness", [&] { return detail::skewness(z); });
  b.add("kurtosis", [&] { return detail::kurtosis(z); });
  b.add("rms", [&] {
    double s = 0.0;
    for (double x : z) s += x * x;
    return std::sqrt(s / static_cast<double>(z.size()));
  });
  return b.out;
}

// 30-feature library: the statistical set plus 20 shape descriptors.
inline FeatureVector ts_feature_library(const std::vector<double>& z) {
  if (z.size() < 8)
    fail(ErrorCode::TooShort, "ts_feature_library needs >= 8 samples");
  FeatureVector fv = statistical_features(z);
  detail::Builder b;
  b.out = std::move(fv);
  double m = stats::mean(z);
  for (size_t lag : {1, 2, 5, 10})
    b.add("autocorr_lag" + std::to_string(lag), [&, lag] {
      double r = detail::autocorr_at(z, lag);
      return r;
    });
  auto bands = detail::band_energy(z);
  for (size_t i = 0; i < 4; ++i)
    b.add("fft_band" + std::to_string(i + 1), [&, i] { return bands[i]; });
  b.add("count_above_mean", [&] {
    double c = 0;
    for (double x : z) c += x > m ? 1 : 0;
    return c;
  });
  b.add("count_below_mean", [&] {
    double c = 0;
    for (double x : z) c += x < m ? 1 : 0;
    return c;
  });
  b.add("longest_run_above_mean", [&] {
    double best = 0, run = 0;
    for (double x : z) {
      run = x > m ? run + 1 : 0;
      best = std::max(best, run);
    }
    return best;
  });
  b.add("mean_crossings", [&] {
    double c = 0;
    for (size_t i = 1; i < z.size(); ++i)
      if ((z[i] - m) * (z[i - 1] - m) < 0.0) c += 1;
    return c;
  });
  b.add("abs_energy", [&] {
    double s = 0;
    for (double x : z) s += x * x;
    return s;
  });
  b.add("mean_abs_change", [&] {
    double s = 0;
    for (size_t i = 1; i < z.size(); ++i) s += std::abs(z[i] - z[i - 1]);
    return s / static_cast<double>(z.size() - 1);
  });
  for (double q : {0.1, 0.25, 0.75, 0.9}) {
    std::string name = "quantile_" + std::to_string(q).substr(0, 4);
    b.add(name, [&, q] { return stats::quantile(z, q); });
  }
  b.add("trend_slope", [&] { return detail::trend_slope(z); });
  b.add("entropy_proxy", [&] {
    double sd = stats::stddev(z);
    if (sd <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> d(z.size() - 1);
    for (size_t i = 1; i < z.size(); ++i) d[i - 1] = z[i] - z[i - 1];
    return stats::stddev(d) / sd;
  });
  return b.out;
}

struct RankedFeature {
  std::string name;
  double p_value = 1.0;
};

namespace detail {

// Asymptotic Kolmogorov Q function, the two-sided p-value tail.
inline double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) *
                  std::exp(-2.0 * lambda * lambda * k * k);
    sum += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

inline double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size());
  size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n1 -
                             static_cast<double>(j) / n2));
  }
  double ne = std::sqrt(n1 * n2 / (n1 + n2));
  return kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
}

}  // namespace detail

// One-vs-rest two-sample KS test per feature; the score is the
// smallest p-value over classes. Sorted ascending, name as tie-break.
inline std::vector<RankedFeature> rank_features(
    const std::vector<std::vector<double>>& X, const std::vector<int>& y,
    const std::vector<std::string>& names) {
  if (X.size() != y.size() || X.size() < 10)
    fail(ErrorCode::DegenerateLabels, "need >= 10 labeled rows");
  std::vector<int> classes(y);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2)
    fail(ErrorCode::DegenerateLabels, "need >= 2 classes");
  for (const auto& row : X)
    if (row.size() != names.size())
      fail(ErrorCode::LengthMismatch, "row width does not match names");
  std::vector<RankedFeature> ranked;
  for (size_t f = 0; f < names.size(); ++f) {
    double best_p = 1.0;
    for (int c : classes) {
      std::vector<double> in_class, rest;
      for (size_t i = 0; i < X.size(); ++i)
        (y[i] == c ? in_class : rest).push_back(X[i][f]);
      if (in_class.empty() || rest.empty()) continue;
      best_p = std::min(best_p, detail::ks_two_sample_p(in_class, rest));
    }
    ranked.push_back({names[f], best_p});
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const RankedFeature& a, const RankedFeature& b) {
              if (a.p_value != b.p_value) return a.p_value < b.p_value;
              return a.name < b.name;
            });
  return ranked;
}

// --- feature matrix CSV: feature columns then a final label column y ---

inline void write_feature_matrix_csv(const std::vector<std::vector<double>>& X,
                                     const std::vector<int>& y,
                                     const std::vector<std::string>& names,
                                     std::ostream& os) {
  for (const auto& n : names) os << n << ",";
  os << "y\n";
  for (size_t i = 0; i < X.size(); ++i) {
    for (double v : X[i]) os << v << ",";
    os << y[i] << "\n";
  }
}

struct FeatureMatrix {
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  std::vector<std::string> names;
};

inline FeatureMatrix read_feature_matrix_csv(std::istream& is) {
  FeatureMatrix fm;
  std::string line;
  if (!std::getline(is, line)) fail(ErrorCode::IoError, "empty feature file");
  std::stringstream header(line);
  std::string cell;
  while (std::getline(header, cell, ',')) fm.names.push_back(cell);
  if (fm.names.empty() || fm.names.back() != "y")
    fail(ErrorCode::IoError, "feature matrix must end with a y column");
  fm.names.pop_back();
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::vector<double> vals;
    while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != fm.names.size() + 1)
      fail(ErrorCode::IoError, "malformed feature row: " + line);
    fm.y.push_back(static_cast<int>(vals.back()));
    vals.pop_back();
    fm.X.push_back(std::move(vals));
  }
  return fm;
}

}  // namespace tsfeatures
}  // namespace lumigroup
