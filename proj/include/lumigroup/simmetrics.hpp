#pragma once

#include "lumigroup/common.hpp"

namespace lumigroup {

enum class Metric { kPearson, kSpearman, kDistanceCorrelation, kDtwDistance };
enum class Equalizer { kFill, kCut, kDtw };

struct SimilarityConfig {
  Metric metric = Metric::kPearson;
  Equalizer equalizer = Equalizer::kDtw;
  double threshold = 0.7;
};

struct SimilarityResult {
  double score = 0.0;
  bool degenerate = false;
};

namespace simmetrics {

// Best per-metric combinations from parameter estimation; the
// simulation default keeps the lower 0.7 bar.
inline constexpr SimilarityConfig kBestPearson{Metric::kPearson,
                                               Equalizer::kDtw, 0.8};
inline constexpr SimilarityConfig kBestSpearman{Metric::kSpearman,
                                                Equalizer::kDtw, 0.9};
inline constexpr SimilarityConfig kBestDtw{Metric::kDtwDistance,
                                           Equalizer::kDtw, 0.7};
inline constexpr SimilarityConfig kDefault{Metric::kPearson, Equalizer::kDtw,
                                           0.7};

struct DtwAlignment {
  double cost = 0.0;
  std::vector<std::pair<size_t, size_t>> path;  // (index into a, index into b)
};

// Dynamic-programming DTW with |a-b| step cost and moves
// {(1,0),(0,1),(1,1)}. Ties prefer the diagonal so the alignment is
// symmetric in its arguments.
inline DtwAlignment dtw_align(const std::vector<double>& a,
                              const std::vector<double>& b) {
  if (a.empty() || b.empty())
    fail(ErrorCode::EmptyInput, "dtw_align needs non-empty inputs");
  size_t n = a.size(), m = b.size();
  std::vector<double> d(n * m);
  auto at = [&](size_t i, size_t j) -> double& { return d[i * m + j]; };
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < m; ++j) {
      double c = std::abs(a[i] - b[j]);
      if (i == 0 && j == 0) {
        at(i, j) = c;
      } else if (i == 0) {
        at(i, j) = c + at(0, j - 1);
      } else if (j == 0) {
        at(i, j) = c + at(i - 1, 0);
      } else {
        at(i, j) =
            c + std::min({at(i - 1, j - 1), at(i - 1, j), at(i, j - 1)});
      }
    }
  DtwAlignment out;
  out.cost = at(n - 1, m - 1);
  size_t i = n - 1, j = m - 1;
  out.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      double diag = at(i - 1, j - 1), up = at(i - 1, j), left = at(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up < left) {
        --i;
      } else if (left < up) {
        --j;
      } else {
        // up == left < diag; step toward the main diagonal so the
        // path does not depend on argument order.
        if (i * m > j * n)
          --i;
        else
          --j;
      }
    }
    out.path.emplace_back(i, j);
  }
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

inline std::pair<std::vector<double>, std::vector<double>> equalize(
    const std::vector<double>& a, const std::vector<double>& b,
    Equalizer method) {
  if (a.empty() || b.empty())
    fail(ErrorCode::EmptyInput, "equalize needs non-empty inputs");
  if (a.size() == b.size()) return {a, b};
  switch (method) {
    case Equalizer::kFill: {
      auto ea = a, eb = b;
      auto& shorter = ea.size() < eb.size() ? ea : eb;
      size_t target = std::max(ea.size(), eb.size());
      shorter.resize(target, shorter.back());
      return {ea, eb};
    }
    case Equalizer::kCut: {
      size_t target = std::min(a.size(), b.size());
      return {std::vector<double>(a.begin(), a.begin() + target),
              std::vector<double>(b.begin(), b.begin() + target)};
    }
    case Equalizer::kDtw: {
      auto align = dtw_align(a, b);
      std::vector<double> ea, eb;
      ea.reserve(align.path.size());
      eb.reserve(align.path.size());
      for (auto [i, j] : align.path) {
        ea.push_back(a[i]);
        eb.push_back(b[j]);
      }
      return {ea, eb};
    }
  }
  fail(ErrorCode::EmptyInput, "unreachable");
}

namespace detail {

// Distance correlation in O(n^2) time and O(n) memory: row means in a
// first pass, centered products accumulated in a second.
inline double distance_correlation(const std::vector<double>& x,
                                   const std::vector<double>& y,
                                   bool* degenerate) {
  size_t n = x.size();
  std::vector<double> rx(n, 0.0), ry(n, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      rx[i] += std::abs(x[i] - x[j]);
      ry[i] += std::abs(y[i] - y[j]);
    }
  double gx = 0.0, gy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    rx[i] /= static_cast<double>(n);
    ry[i] /= static_cast<double>(n);
    gx += rx[i];
    gy += ry[i];
  }
  gx /= static_cast<double>(n);
  gy /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      double ax = std::abs(x[i] - x[j]) - rx[i] - rx[j] + gx;
      double ay = std::abs(y[i] - y[j]) - ry[i] - ry[j] + gy;
      sxy += ax * ay;
      sxx += ax * ax;
      syy += ay * ay;
    }
  if (sxx <= 0.0 || syy <= 0.0) {
    *degenerate = true;
    return 0.0;
  }
  double d = sxy / std::sqrt(sxx * syy);
  return std::clamp(d, 0.0, 1.0);
}

}  // namespace detail

inline SimilarityResult similarity(const std::vector<double>& a,
                                   const std::vector<double>& b,
                                   const SimilarityConfig& config) {
  if (config.threshold < 0.0 || config.threshold > 1.0)
    fail(ErrorCode::ConfigInvalid, "threshold must be in [0,1]");
  // Canonical argument order makes every metric/equalizer symmetric.
  if (std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end()))
    return similarity(b, a, config);
  auto [ea, eb] = equalize(a, b, config.equalizer);
  SimilarityResult res;
  if (ea.size() < 2) {
    res.degenerate = true;
    return res;
  }
  switch (config.metric) {
    case Metric::kPearson: {
      double r = stats::pearson(ea, eb, &res.degenerate);
      res.score = res.degenerate ? 0.0 : 0.5 * (r + 1.0);
      break;
    }
    case Metric::kSpearman: {
      double r = stats::pearson(stats::ranks(ea), stats::ranks(eb),
                                &res.degenerate);
      res.score = res.degenerate ? 0.0 : 0.5 * (r + 1.0);
      break;
    }
    case Metric::kDistanceCorrelation:
      res.score = detail::distance_correlation(ea, eb, &res.degenerate);
      break;
    case Metric::kDtwDistance: {
      double lo = std::min(*std::min_element(ea.begin(), ea.end()),
                           *std::min_element(eb.begin(), eb.end()));
      double hi = std::max(*std::max_element(ea.begin(), ea.end()),
                           *std::max_element(eb.begin(), eb.end()));
      if (hi - lo <= 0.0) {
        // Equalized inputs are jointly constant: identical, and DTW
        // cost 0 is well-defined, so report a perfect score.
        res.score = 1.0;
        break;
      }
      auto align = dtw_align(ea, eb);
      double norm =
          align.cost / (static_cast<double>(align.path.size()) * (hi - lo));
      res.score = 1.0 / (1.0 + norm);
      break;
    }
  }
  return res;
}

inline bool same_region(const std::vector<double>& a,
                        const std::vector<double>& b,
                        const SimilarityConfig& config) {
  return similarity(a, b, config).score >= config.threshold;
}

}  // namespace simmetrics
}  // namespace lumigroup
