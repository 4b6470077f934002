#pragma once

#include <json.hpp>

#include <chrono>
#include <limits>
#include <map>

#include "lumigroup/common.hpp"

namespace lumigroup {

struct Dataset {
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  std::vector<std::string> feature_names;

  size_t n() const { return X.size(); }
  size_t dim() const { return X.empty() ? 0 : X[0].size(); }
};

struct EvalReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  double overall = 0.0;  // mean of accuracy, precision, recall, f1
  double runtime_s = 0.0;
};

enum class ModelKind {
  kRandomForest,
  kExtraTrees,
  kGradientBoosting,
  kNaiveBayes,
  kAdaBoost,
  kLinearSvm,
};

struct Hyperparams {
  int n_trees = 100;
  int max_depth = 8;
  int boosting_rounds = 100;
  int boosting_depth = 2;
  double learning_rate = 0.1;
  int ada_rounds = 50;
  int svm_epochs = 30;
  double svm_lambda = 1e-4;
  double nb_var_floor = 1e-9;
};

namespace mlkit {

namespace detail {

// Flat binary tree. feature == -1 marks a leaf; value holds a class
// distribution for classification or a single scalar for regression.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1, right = -1;
  std::vector<double> value;
};

struct Tree {
  std::vector<TreeNode> nodes;

  const std::vector<double>& predict_row(const std::vector<double>& x) const {
    int cur = 0;
    while (nodes[cur].feature >= 0)
      cur = x[nodes[cur].feature] <= nodes[cur].threshold ? nodes[cur].left
                                                          : nodes[cur].right;
    return nodes[cur].value;
  }
};

inline double gini(const std::vector<double>& counts, double total) {
  if (total <= 0.0) return 0.0;
  double g = 1.0;
  for (double c : counts) g -= (c / total) * (c / total);
  return g;
}

struct SplitSpec {
  int feature = -1;
  double threshold = 0.0;
  double score = std::numeric_limits<double>::infinity();
};

struct TreeConfig {
  int max_depth = 8;
  size_t mtry = 0;            // 0: all features
  bool random_threshold = false;  // extra-trees style splits
};

// Weighted gini split search over one feature by sorted scan.
inline void scan_feature(const std::vector<std::vector<double>>& X,
                         const std::vector<int>& y,
                         const std::vector<double>& w,
                         const std::vector<size_t>& idx, size_t n_classes,
                         int f, SplitSpec* best) {
  std::vector<size_t> order(idx);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return X[a][f] < X[b][f]; });
  std::vector<double> left(n_classes, 0.0), right(n_classes, 0.0);
  double wl = 0.0, wr = 0.0;
  for (size_t i : order) {
    right[static_cast<size_t>(y[i])] += w[i];
    wr += w[i];
  }
  for (size_t pos = 0; pos + 1 < order.size(); ++pos) {
    size_t i = order[pos];
    left[static_cast<size_t>(y[i])] += w[i];
    wl += w[i];
    right[static_cast<size_t>(y[i])] -= w[i];
    wr -= w[i];
    if (X[order[pos]][f] == X[order[pos + 1]][f]) continue;
    double score = (wl * gini(left, wl) + wr * gini(right, wr)) / (wl + wr);
    if (score < best->score) {
      best->score = score;
      best->feature = f;
      best->threshold = 0.5 * (X[order[pos]][f] + X[order[pos + 1]][f]);
    }
  }
}

inline void scan_feature_random(const std::vector<std::vector<double>>& X,
                                const std::vector<int>& y,
                                const std::vector<double>& w,
                                const std::vector<size_t>& idx,
                                size_t n_classes, int f, Rng& rng,
                                SplitSpec* best) {
  double lo = X[idx[0]][f], hi = lo;
  for (size_t i : idx) {
    lo = std::min(lo, X[i][f]);
    hi = std::max(hi, X[i][f]);
  }
  if (hi <= lo) return;
  std::uniform_real_distribution<double> th(lo, hi);
  double threshold = th(rng);
  std::vector<double> left(n_classes, 0.0), right(n_classes, 0.0);
  double wl = 0.0, wr = 0.0;
  for (size_t i : idx) {
    if (X[i][f] <= threshold) {
      left[static_cast<size_t>(y[i])] += w[i];
      wl += w[i];
    } else {
      right[static_cast<size_t>(y[i])] += w[i];
      wr += w[i];
    }
  }
  if (wl <= 0.0 || wr <= 0.0) return;
  double score = (wl * gini(left, wl) + wr * gini(right, wr)) / (wl + wr);
  if (score < best->score) {
    best->score = score;
    best->feature = f;
    best->threshold = threshold;
  }
}

inline int build_class_node(const std::vector<std::vector<double>>& X,
                            const std::vector<int>& y,
                            const std::vector<double>& w,
                            const std::vector<size_t>& idx, size_t n_classes,
                            const TreeConfig& cfg, int depth, Rng& rng,
                            Tree* tree) {
  std::vector<double> counts(n_classes, 0.0);
  double total = 0.0;
  for (size_t i : idx) {
    counts[static_cast<size_t>(y[i])] += w[i];
    total += w[i];
  }
  auto make_leaf = [&]() {
    TreeNode leaf;
    leaf.value = counts;
    if (total > 0.0)
      for (auto& c : leaf.value) c /= total;
    tree->nodes.push_back(std::move(leaf));
    return static_cast<int>(tree->nodes.size() - 1);
  };
  if (depth >= cfg.max_depth || idx.size() < 2 || gini(counts, total) <= 0.0)
    return make_leaf();

  size_t d = X[0].size();
  std::vector<int> features(d);
  for (size_t f = 0; f < d; ++f) features[f] = static_cast<int>(f);
  size_t mtry = cfg.mtry == 0 ? d : std::min(cfg.mtry, d);
  if (mtry < d) {
    for (size_t i = 0; i < mtry; ++i) {
      std::uniform_int_distribution<size_t> pick(i, d - 1);
      std::swap(features[i], features[pick(rng)]);
    }
    features.resize(mtry);
  }
  SplitSpec best;
  for (int f : features) {
    if (cfg.random_threshold)
      scan_feature_random(X, y, w, idx, n_classes, f, rng, &best);
    else
      scan_feature(X, y, w, idx, n_classes, f, &best);
  }
  if (best.feature < 0) return make_leaf();
  std::vector<size_t> li, ri;
  for (size_t i : idx)
    (X[i][best.feature] <= best.threshold ? li : ri).push_back(i);
  if (li.empty() || ri.empty()) return make_leaf();

  int node_id = static_cast<int>(tree->nodes.size());
  tree->nodes.emplace_back();
  tree->nodes[node_id].feature = best.feature;
  tree->nodes[node_id].threshold = best.threshold;
  int l = build_class_node(X, y, w, li, n_classes, cfg, depth + 1, rng, tree);
  int r = build_class_node(X, y, w, ri, n_classes, cfg, depth + 1, rng, tree);
  tree->nodes[node_id].left = l;
  tree->nodes[node_id].right = r;
  return node_id;
}

// Regression tree over Newton targets: leaves carry sum(g)/sum(h).
inline int build_reg_node(const std::vector<std::vector<double>>& X,
                          const std::vector<double>& g,
                          const std::vector<double>& h,
                          const std::vector<size_t>& idx, int max_depth,
                          int depth, Tree* tree) {
  double sg = 0.0, sh = 0.0;
  for (size_t i : idx) {
    sg += g[i];
    sh += h[i];
  }
  auto make_leaf = [&]() {
    TreeNode leaf;
    leaf.value = {sg / std::max(sh, 1e-12)};
    tree->nodes.push_back(std::move(leaf));
    return static_cast<int>(tree->nodes.size() - 1);
  };
  if (depth >= max_depth || idx.size() < 2) return make_leaf();

  size_t d = X[0].size();
  int best_f = -1;
  double best_thr = 0.0;
  // Maximize the standard gradient-gain score sum(g)^2 / sum(h).
  double base = sg * sg / std::max(sh, 1e-12);
  double best_gain = 1e-12;
  for (size_t f = 0; f < d; ++f) {
    std::vector<size_t> order(idx);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return X[a][f] < X[b][f]; });
    double lg = 0.0, lh = 0.0;
    for (size_t pos = 0; pos + 1 < order.size(); ++pos) {
      lg += g[order[pos]];
      lh += h[order[pos]];
      if (X[order[pos]][f] == X[order[pos + 1]][f]) continue;
      double rg = sg - lg, rh = sh - lh;
      double gain = lg * lg / std::max(lh, 1e-12) +
                    rg * rg / std::max(rh, 1e-12) - base;
      if (gain > best_gain) {
        best_gain = gain;
        best_f = static_cast<int>(f);
        best_thr = 0.5 * (X[order[pos]][f] + X[order[pos + 1]][f]);
      }
    }
  }
  if (best_f < 0) return make_leaf();
  std::vector<size_t> li, ri;
  for (size_t i : idx) (X[i][best_f] <= best_thr ? li : ri).push_back(i);
  if (li.empty() || ri.empty()) return make_leaf();
  int node_id = static_cast<int>(tree->nodes.size());
  tree->nodes.emplace_back();
  tree->nodes[node_id].feature = best_f;
  tree->nodes[node_id].threshold = best_thr;
  int l = build_reg_node(X, g, h, li, max_depth, depth + 1, tree);
  int r = build_reg_node(X, g, h, ri, max_depth, depth + 1, tree);
  tree->nodes[node_id].left = l;
  tree->nodes[node_id].right = r;
  return node_id;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace detail

class Model {
 public:
  ModelKind kind = ModelKind::kRandomForest;
  std::vector<int> classes;

  // ensembles
  std::vector<detail::Tree> trees;
  std::vector<double> tree_weights;  // AdaBoost stage weights
  // gradient boosting: per class, one regression tree per round
  std::vector<std::vector<detail::Tree>> gbm_trees;
  std::vector<double> gbm_base;
  double learning_rate = 0.1;
  // naive Bayes
  std::vector<double> nb_log_prior;
  std::vector<std::vector<double>> nb_mean, nb_var;
  // linear SVM (standardized inputs)
  std::vector<std::vector<double>> svm_w;
  std::vector<double> svm_b;
  std::vector<double> feat_mean, feat_scale;

  // Per-class scores; higher means more likely. Normalized to sum 1
  // for probabilistic kinds, raw margins for the SVM.
  std::vector<double> predict_scores(const std::vector<double>& x) const {
    size_t k = classes.size();
    std::vector<double> s(k, 0.0);
    switch (kind) {
      case ModelKind::kRandomForest:
      case ModelKind::kExtraTrees: {
        for (const auto& t : trees) {
          const auto& v = t.predict_row(x);
          for (size_t c = 0; c < k; ++c) s[c] += v[c];
        }
        for (auto& v : s) v /= static_cast<double>(trees.size());
        break;
      }
      case ModelKind::kAdaBoost: {
        for (size_t t = 0; t < trees.size(); ++t) {
          const auto& v = trees[t].predict_row(x);
          size_t arg = 0;
          for (size_t c = 1; c < k; ++c)
            if (v[c] > v[arg]) arg = c;
          s[arg] += tree_weights[t];
        }
        double total = 0.0;
        for (double v : s) total += v;
        if (total > 0.0)
          for (auto& v : s) v /= total;
        break;
      }
      case ModelKind::kGradientBoosting: {
        for (size_t c = 0; c < k; ++c) {
          double f = gbm_base[c];
          for (const auto& t : gbm_trees[c])
            f += learning_rate * t.predict_row(x)[0];
          s[c] = detail::sigmoid(f);
        }
        double total = 0.0;
        for (double v : s) total += v;
        if (total > 0.0)
          for (auto& v : s) v /= total;
        break;
      }
      case ModelKind::kNaiveBayes: {
        std::vector<double> logp(k);
        for (size_t c = 0; c < k; ++c) {
          double lp = nb_log_prior[c];
          for (size_t f = 0; f < x.size(); ++f) {
            double var = nb_var[c][f];
            double diff = x[f] - nb_mean[c][f];
            lp += -0.5 * std::log(2.0 * M_PI * var) - diff * diff / (2.0 * var);
          }
          logp[c] = lp;
        }
        double mx = *std::max_element(logp.begin(), logp.end());
        double total = 0.0;
        for (size_t c = 0; c < k; ++c) {
          s[c] = std::exp(logp[c] - mx);
          total += s[c];
        }
        for (auto& v : s) v /= total;
        break;
      }
      case ModelKind::kLinearSvm: {
        for (size_t c = 0; c < k; ++c) {
          double m = svm_b[c];
          for (size_t f = 0; f < x.size(); ++f)
            m += svm_w[c][f] * (x[f] - feat_mean[f]) / feat_scale[f];
          s[c] = m;
        }
        break;
      }
    }
    return s;
  }

  int predict(const std::vector<double>& x) const {
    auto s = predict_scores(x);
    size_t arg = 0;
    for (size_t c = 1; c < s.size(); ++c)
      if (s[c] > s[arg]) arg = c;
    return classes[arg];
  }

  nlohmann::json to_json() const;
  static Model from_json(const nlohmann::json& j);
  void save(std::ostream& os) const { os << to_json().dump(); }
  static Model load(std::istream& is) {
    return from_json(nlohmann::json::parse(is));
  }
};

namespace detail {

inline nlohmann::json tree_to_json(const Tree& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : t.nodes)
    nodes.push_back({{"f", n.feature},
                     {"t", n.threshold},
                     {"l", n.left},
                     {"r", n.right},
                     {"v", n.value}});
  return nodes;
}

inline Tree tree_from_json(const nlohmann::json& j) {
  Tree t;
  for (const auto& n : j) {
    TreeNode node;
    node.feature = n.at("f").get<int>();
    node.threshold = n.at("t").get<double>();
    node.left = n.at("l").get<int>();
    node.right = n.at("r").get<int>();
    node.value = n.at("v").get<std::vector<double>>();
    t.nodes.push_back(std::move(node));
  }
  return t;
}

inline const char* kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kRandomForest: return "random_forest";
    case ModelKind::kExtraTrees: return "extra_trees";
    case ModelKind::kGradientBoosting: return "gradient_boosting";
    case ModelKind::kNaiveBayes: return "naive_bayes";
    case ModelKind::kAdaBoost: return "ada_boost";
    case ModelKind::kLinearSvm: return "linear_svm";
  }
  return "?";
}

inline ModelKind kind_from_name(const std::string& s) {
  for (ModelKind k :
       {ModelKind::kRandomForest, ModelKind::kExtraTrees,
        ModelKind::kGradientBoosting, ModelKind::kNaiveBayes,
        ModelKind::kAdaBoost, ModelKind::kLinearSvm})
    if (s == kind_name(k)) return k;
  fail(ErrorCode::BadType, "unknown model kind: " + s);
}

}  // namespace detail

inline nlohmann::json Model::to_json() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["kind"] = detail::kind_name(kind);
  j["classes"] = classes;
  j["learning_rate"] = learning_rate;
  nlohmann::json trees_j = nlohmann::json::array();
  for (const auto& t : trees) trees_j.push_back(detail::tree_to_json(t));
  j["trees"] = trees_j;
  j["tree_weights"] = tree_weights;
  nlohmann::json gbm_j = nlohmann::json::array();
  for (const auto& per_class : gbm_trees) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : per_class) arr.push_back(detail::tree_to_json(t));
    gbm_j.push_back(arr);
  }
  j["gbm_trees"] = gbm_j;
  j["gbm_base"] = gbm_base;
  j["nb_log_prior"] = nb_log_prior;
  j["nb_mean"] = nb_mean;
  j["nb_var"] = nb_var;
  j["svm_w"] = svm_w;
  j["svm_b"] = svm_b;
  j["feat_mean"] = feat_mean;
  j["feat_scale"] = feat_scale;
  return j;
}

inline Model Model::from_json(const nlohmann::json& j) {
  if (j.at("format_version").get<int>() != 1)
    fail(ErrorCode::BadType, "unsupported model format version");
  Model m;
  m.kind = detail::kind_from_name(j.at("kind").get<std::string>());
  m.classes = j.at("classes").get<std::vector<int>>();
  m.learning_rate = j.at("learning_rate").get<double>();
  for (const auto& t : j.at("trees"))
    m.trees.push_back(detail::tree_from_json(t));
  m.tree_weights = j.at("tree_weights").get<std::vector<double>>();
  for (const auto& per_class : j.at("gbm_trees")) {
    std::vector<detail::Tree> arr;
    for (const auto& t : per_class) arr.push_back(detail::tree_from_json(t));
    m.gbm_trees.push_back(std::move(arr));
  }
  m.gbm_base = j.at("gbm_base").get<std::vector<double>>();
  m.nb_log_prior = j.at("nb_log_prior").get<std::vector<double>>();
  m.nb_mean = j.at("nb_mean").get<std::vector<std::vector<double>>>();
  m.nb_var = j.at("nb_var").get<std::vector<std::vector<double>>>();
  m.svm_w = j.at("svm_w").get<std::vector<std::vector<double>>>();
  m.svm_b = j.at("svm_b").get<std::vector<double>>();
  m.feat_mean = j.at("feat_mean").get<std::vector<double>>();
  m.feat_scale = j.at("feat_scale").get<std::vector<double>>();
  return m;
}

namespace detail {

// Remaps labels to dense [0, k) and validates the dataset.
struct Encoded {
  std::vector<int> classes;
  std::vector<int> y;
};

inline Encoded encode_labels(const Dataset& data) {
  if (data.n() < 2) fail(ErrorCode::DegenerateDataset, "need >= 2 rows");
  for (const auto& row : data.X)
    if (row.size() != data.dim())
      fail(ErrorCode::DegenerateDataset, "ragged feature rows");
  Encoded e;
  e.classes = data.y;
  std::sort(e.classes.begin(), e.classes.end());
  e.classes.erase(std::unique(e.classes.begin(), e.classes.end()),
                  e.classes.end());
  if (e.classes.size() < 2)
    fail(ErrorCode::DegenerateDataset, "need >= 2 classes");
  std::map<int, int> index;
  for (size_t c = 0; c < e.classes.size(); ++c) index[e.classes[c]] = c;
  std::map<int, int> count;
  for (int label : data.y) {
    e.y.push_back(index[label]);
    ++count[label];
  }
  for (auto [label, c] : count)
    if (c < 2)
      fail(ErrorCode::DegenerateDataset,
           "class " + std::to_string(label) + " has < 2 rows");
  return e;
}

}  // namespace detail

inline Model train(ModelKind kind, const Dataset& data, const Hyperparams& hp,
                   Rng& rng) {
  auto enc = detail::encode_labels(data);
  size_t n = data.n(), d = data.dim(), k = enc.classes.size();
  Model m;
  m.kind = kind;
  m.classes = enc.classes;
  m.learning_rate = hp.learning_rate;

  switch (kind) {
    case ModelKind::kRandomForest:
    case ModelKind::kExtraTrees: {
      detail::TreeConfig cfg;
      cfg.max_depth = hp.max_depth;
      cfg.mtry = std::max<size_t>(
          1, static_cast<size_t>(std::lround(std::sqrt(double(d)))));
      cfg.random_threshold = kind == ModelKind::kExtraTrees;
      std::vector<double> w(n, 1.0);
      for (int t = 0; t < hp.n_trees; ++t) {
        std::vector<size_t> idx;
        idx.reserve(n);
        if (kind == ModelKind::kRandomForest) {
          std::uniform_int_distribution<size_t> pick(0, n - 1);
          for (size_t i = 0; i < n; ++i) idx.push_back(pick(rng));
        } else {
          for (size_t i = 0; i < n; ++i) idx.push_back(i);
        }
        detail::Tree tree;
        detail::build_class_node(data.X, enc.y, w, idx, k, cfg, 0, rng, &tree);
        m.trees.push_back(std::move(tree));
      }
      break;
    }
    case ModelKind::kAdaBoost: {
      // SAMME with depth-1 gini stumps.
      detail::TreeConfig cfg;
      cfg.max_depth = 1;
      std::vector<double> w(n, 1.0 / static_cast<double>(n));
      std::vector<size_t> idx(n);
      for (size_t i = 0; i < n; ++i) idx[i] = i;
      for (int round = 0; round < hp.ada_rounds; ++round) {
        detail::Tree stump;
        detail::build_class_node(data.X, enc.y, w, idx, k, cfg, 0, rng,
                                 &stump);
        double err = 0.0;
        std::vector<int> pred(n);
        for (size_t i = 0; i < n; ++i) {
          const auto& v = stump.predict_row(data.X[i]);
          size_t arg = 0;
          for (size_t c = 1; c < k; ++c)
            if (v[c] > v[arg]) arg = c;
          pred[i] = static_cast<int>(arg);
          if (pred[i] != enc.y[i]) err += w[i];
        }
        err = std::clamp(err, 1e-10, 1.0 - 1e-10);
        if (err >= 1.0 - 1.0 / static_cast<double>(k)) break;
        double alpha =
            std::log((1.0 - err) / err) + std::log(static_cast<double>(k) - 1.0);
        m.trees.push_back(std::move(stump));
        m.tree_weights.push_back(alpha);
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
          if (pred[i] != enc.y[i]) w[i] *= std::exp(alpha);
          total += w[i];
        }
        for (auto& v : w) v /= total;
        if (err <= 1e-9) break;  // perfect stump, further rounds are identical
      }
      break;
    }
    case ModelKind::kGradientBoosting: {
      // One-vs-rest logistic boosting, Newton leaf values.
      m.gbm_trees.assign(k, {});
      m.gbm_base.assign(k, 0.0);
      std::vector<size_t> idx(n);
      for (size_t i = 0; i < n; ++i) idx[i] = i;
      for (size_t c = 0; c < k; ++c) {
        double pos = 0.0;
        for (int yi : enc.y) pos += yi == static_cast<int>(c) ? 1.0 : 0.0;
        double prior = std::clamp(pos / static_cast<double>(n), 1e-6, 1 - 1e-6);
        m.gbm_base[c] = std::log(prior / (1.0 - prior));
        std::vector<double> f(n, m.gbm_base[c]);
        for (int round = 0; round < hp.boosting_rounds; ++round) {
          std::vector<double> g(n), h(n);
          for (size_t i = 0; i < n; ++i) {
            double p = detail::sigmoid(f[i]);
            double target = enc.y[i] == static_cast<int>(c) ? 1.0 : 0.0;
            g[i] = target - p;
            h[i] = p * (1.0 - p);
          }
          detail::Tree tree;
          detail::build_reg_node(data.X, g, h, idx, hp.boosting_depth, 0,
                                 &tree);
          for (size_t i = 0; i < n; ++i)
            f[i] += hp.learning_rate * tree.predict_row(data.X[i])[0];
          m.gbm_trees[c].push_back(std::move(tree));
        }
      }
      break;
    }
    case ModelKind::kNaiveBayes: {
      m.nb_log_prior.assign(k, 0.0);
      m.nb_mean.assign(k, std::vector<double>(d, 0.0));
      m.nb_var.assign(k, std::vector<double>(d, 0.0));
      std::vector<double> count(k, 0.0);
      for (size_t i = 0; i < n; ++i) {
        size_t c = static_cast<size_t>(enc.y[i]);
        count[c] += 1.0;
        for (size_t f = 0; f < d; ++f) m.nb_mean[c][f] += data.X[i][f];
      }
      for (size_t c = 0; c < k; ++c)
        for (size_t f = 0; f < d; ++f) m.nb_mean[c][f] /= count[c];
      for (size_t i = 0; i < n; ++i) {
        size_t c = static_cast<size_t>(enc.y[i]);
        for (size_t f = 0; f < d; ++f) {
          double diff = data.X[i][f] - m.nb_mean[c][f];
          m.nb_var[c][f] += diff * diff;
        }
      }
      for (size_t c = 0; c < k; ++c) {
        m.nb_log_prior[c] = std::log(count[c] / static_cast<double>(n));
        for (size_t f = 0; f < d; ++f)
          m.nb_var[c][f] = std::max(m.nb_var[c][f] / count[c], hp.nb_var_floor);
      }
      break;
    }
    case ModelKind::kLinearSvm: {
      // Pegasos one-vs-rest on standardized features.
      m.feat_mean.assign(d, 0.0);
      m.feat_scale.assign(d, 1.0);
      for (const auto& row : data.X)
        for (size_t f = 0; f < d; ++f) m.feat_mean[f] += row[f];
      for (auto& v : m.feat_mean) v /= static_cast<double>(n);
      std::vector<double> var(d, 0.0);
      for (const auto& row : data.X)
        for (size_t f = 0; f < d; ++f) {
          double diff = row[f] - m.feat_mean[f];
          var[f] += diff * diff;
        }
      for (size_t f = 0; f < d; ++f)
        m.feat_scale[f] = std::max(std::sqrt(var[f] / double(n)), 1e-12);
      std::vector<std::vector<double>> Z(n, std::vector<double>(d));
      for (size_t i = 0; i < n; ++i)
        for (size_t f = 0; f < d; ++f)
          Z[i][f] = (data.X[i][f] - m.feat_mean[f]) / m.feat_scale[f];
      m.svm_w.assign(k, std::vector<double>(d, 0.0));
      m.svm_b.assign(k, 0.0);
      std::uniform_int_distribution<size_t> pick(0, n - 1);
      for (size_t c = 0; c < k; ++c) {
        auto& w = m.svm_w[c];
        double& b = m.svm_b[c];
        size_t steps = static_cast<size_t>(hp.svm_epochs) * n;
        for (size_t t = 1; t <= steps; ++t) {
          size_t i = pick(rng);
          double yi = enc.y[i] == static_cast<int>(c) ? 1.0 : -1.0;
          double eta = 1.0 / (hp.svm_lambda * static_cast<double>(t));
          double margin = b;
          for (size_t f = 0; f < d; ++f) margin += w[f] * Z[i][f];
          double shrink = 1.0 - eta * hp.svm_lambda;
          for (auto& wf : w) wf *= shrink;
          if (yi * margin < 1.0) {
            for (size_t f = 0; f < d; ++f) w[f] += eta * yi * Z[i][f];
            b += eta * yi;
          }
        }
      }
      break;
    }
  }
  return m;
}

// --- evaluation ---

namespace detail {

// One-vs-rest AUC by the Mann-Whitney statistic with tie correction.
inline double auc_one_vs_rest(const std::vector<int>& y_true,
                              const std::vector<std::vector<double>>& scores,
                              const std::vector<int>& classes) {
  double total = 0.0;
  size_t used = 0;
  for (size_t c = 0; c < classes.size(); ++c) {
    std::vector<double> s;
    std::vector<bool> pos;
    size_t n_pos = 0;
    for (size_t i = 0; i < y_true.size(); ++i) {
      s.push_back(scores[i][c]);
      bool p = y_true[i] == classes[c];
      pos.push_back(p);
      n_pos += p ? 1 : 0;
    }
    size_t n_neg = s.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) continue;
    auto r = stats::ranks(s);
    double rank_sum = 0.0;
    for (size_t i = 0; i < s.size(); ++i)
      if (pos[i]) rank_sum += r[i];
    double u = rank_sum - static_cast<double>(n_pos) *
                              (static_cast<double>(n_pos) + 1.0) / 2.0;
    total += u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
    ++used;
  }
  return used > 0 ? total / static_cast<double>(used) : 0.0;
}

}  // namespace detail

// Confusion-matrix metrics; precision/recall/F1 macro-averaged over
// the classes present in y_true, per-class F1 before averaging.
inline EvalReport evaluate(const std::vector<int>& y_true,
                           const std::vector<int>& y_pred,
                           const std::vector<std::vector<double>>& scores,
                           const std::vector<int>& classes) {
  if (y_true.empty() || y_true.size() != y_pred.size())
    fail(ErrorCode::LengthMismatch, "evaluate needs matching label vectors");
  EvalReport rep;
  size_t n = y_true.size();
  double correct = 0.0;
  for (size_t i = 0; i < n; ++i) correct += y_true[i] == y_pred[i] ? 1.0 : 0.0;
  rep.accuracy = correct / static_cast<double>(n);
  double psum = 0.0, rsum = 0.0, fsum = 0.0;
  size_t used = 0;
  for (int c : classes) {
    double tp = 0, fp = 0, fn = 0, support = 0;
    for (size_t i = 0; i < n; ++i) {
      if (y_true[i] == c) ++support;
      if (y_pred[i] == c && y_true[i] == c) ++tp;
      if (y_pred[i] == c && y_true[i] != c) ++fp;
      if (y_pred[i] != c && y_true[i] == c) ++fn;
    }
    if (support == 0) continue;
    double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    double rec = tp / (tp + fn);
    double f1 = prec + rec > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    psum += prec;
    rsum += rec;
    fsum += f1;
    ++used;
  }
  if (used > 0) {
    rep.precision = psum / static_cast<double>(used);
    rep.recall = rsum / static_cast<double>(used);
    rep.f1 = fsum / static_cast<double>(used);
  }
  rep.auc = scores.empty() ? 0.0
                           : detail::auc_one_vs_rest(y_true, scores, classes);
  rep.overall = 0.25 * (rep.accuracy + rep.precision + rep.recall + rep.f1);
  return rep;
}

// Stratified k-fold cross-validation; metrics averaged across folds.
inline EvalReport kfold_cv(ModelKind kind, const Dataset& data, int k,
                           Rng& rng, const Hyperparams& hp = {}) {
  auto t0 = std::chrono::steady_clock::now();
  auto enc = detail::encode_labels(data);
  if (k < 2) fail(ErrorCode::ConfigInvalid, "k must be >= 2");
  std::map<int, std::vector<size_t>> by_class;
  for (size_t i = 0; i < data.n(); ++i) by_class[data.y[i]].push_back(i);
  std::vector<std::vector<size_t>> folds(k);
  size_t dealt = 0;
  for (auto& [label, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (size_t i : idx) folds[dealt++ % k].push_back(i);
  }
  EvalReport total;
  size_t used_folds = 0;
  for (int f = 0; f < k; ++f) {
    if (folds[f].empty()) continue;
    Dataset train_set;
    train_set.feature_names = data.feature_names;
    std::vector<bool> held(data.n(), false);
    for (size_t i : folds[f]) held[i] = true;
    for (size_t i = 0; i < data.n(); ++i)
      if (!held[i]) {
        train_set.X.push_back(data.X[i]);
        train_set.y.push_back(data.y[i]);
      }
    Model model;
    try {
      model = train(kind, train_set, hp, rng);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DegenerateDataset) continue;
      throw;
    }
    std::vector<int> y_true, y_pred;
    std::vector<std::vector<double>> scores;
    for (size_t i : folds[f]) {
      y_true.push_back(data.y[i]);
      y_pred.push_back(model.predict(data.X[i]));
      scores.push_back(model.predict_scores(data.X[i]));
    }
    auto rep = evaluate(y_true, y_pred, scores, model.classes);
    total.accuracy += rep.accuracy;
    total.precision += rep.precision;
    total.recall += rep.recall;
    total.f1 += rep.f1;
    total.auc += rep.auc;
    ++used_folds;
  }
  if (used_folds == 0)
    fail(ErrorCode::DegenerateDataset, "no fold produced a trainable split");
  double nf = static_cast<double>(used_folds);
  total.accuracy /= nf;
  total.precision /= nf;
  total.recall /= nf;
  total.f1 /= nf;
  total.auc /= nf;
  total.overall =
      0.25 * (total.accuracy + total.precision + total.recall + total.f1);
  auto t1 = std::chrono::steady_clock::now();
  total.runtime_s = std::chrono::duration<double>(t1 - t0).count();
  return total;
}

// --- clustering ---

using Points = std::vector<std::vector<double>>;

namespace detail {

inline double sqdist(const std::vector<double>& a,
                     const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace detail

struct KMeansResult {
  std::vector<int> assign;
  Points centers;
  double inertia = 0.0;
};

inline KMeansResult kmeans(const Points& points, int k, Rng& rng,
                           int restarts = 5) {
  size_t n = points.size();
  if (n < static_cast<size_t>(k))
    fail(ErrorCode::TooFewPoints, "fewer points than clusters");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < restarts; ++attempt) {
    // k-means++ seeding
    Points centers;
    std::uniform_int_distribution<size_t> first(0, n - 1);
    centers.push_back(points[first(rng)]);
    std::vector<double> d2(n);
    while (centers.size() < static_cast<size_t>(k)) {
      double total = 0.0;
      for (size_t i = 0; i < n; ++i) {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& c : centers)
          m = std::min(m, detail::sqdist(points[i], c));
        d2[i] = m;
        total += m;
      }
      if (total <= 0.0) {
        centers.push_back(points[first(rng)]);
        continue;
      }
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng), acc = 0.0;
      size_t chosen = n - 1;
      for (size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target) {
          chosen = i;
          break;
        }
      }
      centers.push_back(points[chosen]);
    }
    std::vector<int> assign(n, 0);
    for (int iter = 0; iter < 100; ++iter) {
      bool changed = false;
      for (size_t i = 0; i < n; ++i) {
        int arg = 0;
        double m = detail::sqdist(points[i], centers[0]);
        for (int c = 1; c < k; ++c) {
          double dd = detail::sqdist(points[i], centers[c]);
          if (dd < m) {
            m = dd;
            arg = c;
          }
        }
        if (assign[i] != arg) {
          assign[i] = arg;
          changed = true;
        }
      }
      size_t dim = points[0].size();
      Points sums(k, std::vector<double>(dim, 0.0));
      std::vector<double> counts(k, 0.0);
      for (size_t i = 0; i < n; ++i) {
        counts[assign[i]] += 1.0;
        for (size_t f = 0; f < dim; ++f) sums[assign[i]][f] += points[i][f];
      }
      for (int c = 0; c < k; ++c)
        if (counts[c] > 0.0)
          for (size_t f = 0; f < dim; ++f)
            centers[c][f] = sums[c][f] / counts[c];
      if (!changed && iter > 0) break;
    }
    double inertia = 0.0;
    for (size_t i = 0; i < n; ++i)
      inertia += detail::sqdist(points[i], centers[assign[i]]);
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.assign = assign;
      best.centers = centers;
    }
  }
  return best;
}

inline double silhouette(const Points& points, const std::vector<int>& assign,
                         int k) {
  size_t n = points.size();
  std::vector<double> count(k, 0.0);
  for (int a : assign) count[a] += 1.0;
  double total = 0.0;
  size_t used = 0;
  for (size_t i = 0; i < n; ++i) {
    std::vector<double> mean_dist(k, 0.0);
    for (size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      mean_dist[assign[j]] += std::sqrt(detail::sqdist(points[i], points[j]));
    }
    int own = assign[i];
    if (count[own] < 2.0) continue;
    double a = mean_dist[own] / (count[own] - 1.0);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == own || count[c] == 0.0) continue;
      b = std::min(b, mean_dist[c] / count[c]);
    }
    if (!std::isfinite(b)) continue;
    total += (b - a) / std::max(a, b);
    ++used;
  }
  return used > 0 ? total / static_cast<double>(used) : 0.0;
}

// Agglomerative clustering with average linkage, cut at k clusters.
inline std::vector<int> hierarchical_average(const Points& points, int k) {
  size_t n = points.size();
  std::vector<std::vector<size_t>> clusters;
  for (size_t i = 0; i < n; ++i) clusters.push_back({i});
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      dist[i][j] = dist[j][i] = std::sqrt(detail::sqdist(points[i], points[j]));
  auto linkage = [&](const std::vector<size_t>& a,
                     const std::vector<size_t>& b) {
    double s = 0.0;
    for (size_t i : a)
      for (size_t j : b) s += dist[i][j];
    return s / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
  };
  while (clusters.size() > static_cast<size_t>(k)) {
    size_t bi = 0, bj = 1;
    double bd = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < clusters.size(); ++i)
      for (size_t j = i + 1; j < clusters.size(); ++j) {
        double d = linkage(clusters[i], clusters[j]);
        if (d < bd) {
          bd = d;
          bi = i;
          bj = j;
        }
      }
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(),
                        clusters[bj].end());
    clusters.erase(clusters.begin() + bj);
  }
  std::vector<int> assign(n, 0);
  for (size_t c = 0; c < clusters.size(); ++c)
    for (size_t i : clusters[c]) assign[i] = static_cast<int>(c);
  return assign;
}

struct GmmResult {
  int k = 0;
  std::vector<double> weights;
  Points means;
  Points vars;  // diagonal covariances
  std::vector<int> assign;
  std::vector<double> loglik_history;
  double loglik = 0.0;
  double bic = 0.0;
  double aic = 0.0;
};

// Diagonal-covariance Gaussian mixture by EM, seeded from k-means.
inline GmmResult gmm_fit(const Points& points, int k, Rng& rng,
                         int max_iters = 200) {
  size_t n = points.size();
  size_t d = points[0].size();
  auto km = kmeans(points, k, rng);
  GmmResult g;
  g.k = k;
  g.weights.assign(k, 0.0);
  g.means = km.centers;
  g.vars.assign(k, std::vector<double>(d, 0.0));
  std::vector<double> counts(k, 0.0);
  for (size_t i = 0; i < n; ++i) {
    int c = km.assign[i];
    counts[c] += 1.0;
    for (size_t f = 0; f < d; ++f) {
      double diff = points[i][f] - g.means[c][f];
      g.vars[c][f] += diff * diff;
    }
  }
  constexpr double kVarFloor = 1e-6;
  for (int c = 0; c < k; ++c) {
    g.weights[c] = std::max(counts[c], 1.0) / static_cast<double>(n);
    for (size_t f = 0; f < d; ++f)
      g.vars[c][f] = std::max(g.vars[c][f] / std::max(counts[c], 1.0),
                              kVarFloor);
  }
  double wsum = 0.0;
  for (double w : g.weights) wsum += w;
  for (auto& w : g.weights) w /= wsum;

  std::vector<std::vector<double>> resp(n, std::vector<double>(k, 0.0));
  auto log_comp = [&](size_t i, int c) {
    double lp = std::log(g.weights[c]);
    for (size_t f = 0; f < d; ++f) {
      double diff = points[i][f] - g.means[c][f];
      lp += -0.5 * std::log(2.0 * M_PI * g.vars[c][f]) -
            diff * diff / (2.0 * g.vars[c][f]);
    }
    return lp;
  };
  double prev = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iters; ++iter) {
    double loglik = 0.0;
    for (size_t i = 0; i < n; ++i) {
      std::vector<double> lp(k);
      double mx = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        lp[c] = log_comp(i, c);
        mx = std::max(mx, lp[c]);
      }
      double total = 0.0;
      for (int c = 0; c < k; ++c) total += std::exp(lp[c] - mx);
      loglik += mx + std::log(total);
      for (int c = 0; c < k; ++c) resp[i][c] = std::exp(lp[c] - mx) / total;
    }
    g.loglik_history.push_back(loglik);
    g.loglik = loglik;
    if (loglik - prev < 1e-8 && iter > 0) break;
    prev = loglik;
    for (int c = 0; c < k; ++c) {
      double rc = 0.0;
      for (size_t i = 0; i < n; ++i) rc += resp[i][c];
      g.weights[c] = rc / static_cast<double>(n);
      for (size_t f = 0; f < d; ++f) {
        double m = 0.0;
        for (size_t i = 0; i < n; ++i) m += resp[i][c] * points[i][f];
        g.means[c][f] = m / std::max(rc, 1e-12);
      }
      for (size_t f = 0; f < d; ++f) {
        double v = 0.0;
        for (size_t i = 0; i < n; ++i) {
          double diff = points[i][f] - g.means[c][f];
          v += resp[i][c] * diff * diff;
        }
        g.vars[c][f] = std::max(v / std::max(rc, 1e-12), kVarFloor);
      }
    }
  }
  g.assign.assign(n, 0);
  for (size_t i = 0; i < n; ++i) {
    int arg = 0;
    for (int c = 1; c < k; ++c)
      if (resp[i][c] > resp[i][arg]) arg = c;
    g.assign[i] = arg;
  }
  double params = static_cast<double>(k) * (2.0 * static_cast<double>(d) + 1.0)
                  - 1.0;
  g.bic = -2.0 * g.loglik + params * std::log(static_cast<double>(n));
  g.aic = -2.0 * g.loglik + 2.0 * params;
  return g;
}

enum class ClusterMethod {
  kKmeansElbow,
  kKmeansSilhouette,
  kHierarchicalSilhouette,
  kGmmBic,
  kGmmAic,
  kXmeans,
};

struct ClusterEstimate {
  int k = 0;
  bool low_confidence = false;
};

namespace detail {

// Elbow of the inertia curve via max distance to the chord between the
// first and last (k, inertia) points, both axes normalized to [0,1].
inline int elbow_k(const std::vector<int>& ks,
                   const std::vector<double>& inertias) {
  double imin = *std::min_element(inertias.begin(), inertias.end());
  double imax = *std::max_element(inertias.begin(), inertias.end());
  double span = std::max(imax - imin, 1e-12);
  size_t m = ks.size();
  auto nx = [&](size_t i) {
    return static_cast<double>(ks[i] - ks[0]) /
           static_cast<double>(ks[m - 1] - ks[0]);
  };
  auto ny = [&](size_t i) { return (inertias[i] - imin) / span; };
  double x0 = nx(0), y0 = ny(0), x1 = nx(m - 1), y1 = ny(m - 1);
  double len = std::hypot(x1 - x0, y1 - y0);
  size_t best = 0;
  double best_d = -1.0;
  for (size_t i = 0; i < m; ++i) {
    double d =
        std::abs((x1 - x0) * (y0 - ny(i)) - (x0 - nx(i)) * (y1 - y0)) / len;
    if (d > best_d) {
      best_d = d;
      best = i;
    }
  }
  return ks[best];
}

}  // namespace detail

// Estimates the number of clusters within [k_min, k_max]. When the
// chosen partition has silhouette < 0.5 the data carries no usable
// structure: the estimate falls back to k_min with low_confidence set.
inline ClusterEstimate cluster_count_estimate(const Points& points,
                                              ClusterMethod method, Rng& rng,
                                              int k_min = 2, int k_max = 9) {
  if (points.size() < static_cast<size_t>(k_max) + 1)
    fail(ErrorCode::TooFewPoints, "need > k_max points");
  std::vector<int> ks;
  for (int k = k_min; k <= k_max; ++k) ks.push_back(k);

  int chosen = k_min;
  std::vector<int> chosen_assign;
  switch (method) {
    case ClusterMethod::kKmeansElbow: {
      std::vector<double> inertias;
      for (int k : ks) inertias.push_back(kmeans(points, k, rng).inertia);
      chosen = detail::elbow_k(ks, inertias);
      chosen_assign = kmeans(points, chosen, rng).assign;
      break;
    }
    case ClusterMethod::kKmeansSilhouette: {
      double best = -2.0;
      for (int k : ks) {
        auto km = kmeans(points, k, rng);
        double s = silhouette(points, km.assign, k);
        if (s > best) {
          best = s;
          chosen = k;
          chosen_assign = km.assign;
        }
      }
      break;
    }
    case ClusterMethod::kHierarchicalSilhouette: {
      double best = -2.0;
      for (int k : ks) {
        auto assign = hierarchical_average(points, k);
        double s = silhouette(points, assign, k);
        if (s > best) {
          best = s;
          chosen = k;
          chosen_assign = assign;
        }
      }
      break;
    }
    case ClusterMethod::kGmmBic:
    case ClusterMethod::kGmmAic: {
      double best = std::numeric_limits<double>::infinity();
      for (int k : ks) {
        auto g = gmm_fit(points, k, rng);
        double score = method == ClusterMethod::kGmmBic ? g.bic : g.aic;
        if (score < best) {
          best = score;
          chosen = k;
          chosen_assign = g.assign;
        }
      }
      break;
    }
    case ClusterMethod::kXmeans: {
      // Recursive 2-means splitting, a split kept when it lowers BIC.
      std::vector<std::vector<size_t>> clusters;
      {
        auto km = kmeans(points, k_min, rng);
        clusters.assign(k_min, {});
        for (size_t i = 0; i < points.size(); ++i)
          clusters[km.assign[i]].push_back(i);
      }
      bool any_split = true;
      while (any_split && clusters.size() < static_cast<size_t>(k_max)) {
        any_split = false;
        std::vector<std::vector<size_t>> next;
        for (auto& c : clusters) {
          if (c.size() < 4 ||
              clusters.size() + next.size() >= static_cast<size_t>(k_max) + 1) {
            next.push_back(c);
            continue;
          }
          Points sub;
          for (size_t i : c) sub.push_back(points[i]);
          auto one = gmm_fit(sub, 1, rng);
          auto two = gmm_fit(sub, 2, rng);
          bool two_sided = false;
          for (int a : two.assign) two_sided |= a == 1;
          bool one_sided = false;
          for (int a : two.assign) one_sided |= a == 0;
          if (two.bic < one.bic && two_sided && one_sided) {
            std::vector<size_t> left, right;
            for (size_t j = 0; j < c.size(); ++j)
              (two.assign[j] == 0 ? left : right).push_back(c[j]);
            next.push_back(left);
            next.push_back(right);
            any_split = true;
          } else {
            next.push_back(c);
          }
        }
        clusters = next;
      }
      chosen = static_cast<int>(clusters.size());
      chosen_assign.assign(points.size(), 0);
      for (size_t c = 0; c < clusters.size(); ++c)
        for (size_t i : clusters[c]) chosen_assign[i] = static_cast<int>(c);
      break;
    }
  }

  ClusterEstimate est;
  double s = silhouette(points, chosen_assign, chosen);
  if (s < 0.5) {
    est.k = k_min;
    est.low_confidence = true;
  } else {
    est.k = std::clamp(chosen, k_min, k_max);
  }
  return est;
}

}  // namespace mlkit
}  // namespace lumigroup
