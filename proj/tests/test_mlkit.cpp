#include <catch2/catch_amalgamated.hpp>

#include "lumigroup/mlkit.hpp"

using namespace lumigroup;
using namespace lumigroup::mlkit;

namespace {

const ModelKind kAllKinds[] = {
    ModelKind::kRandomForest,   ModelKind::kExtraTrees,
    ModelKind::kGradientBoosting, ModelKind::kNaiveBayes,
    ModelKind::kAdaBoost,       ModelKind::kLinearSvm};

// Two well-separated Gaussian classes; feature 0 is discriminative.
Dataset separable_2class(Rng& rng, size_t per_class = 40) {
  Dataset d;
  d.feature_names = {"f0", "f1", "f2", "f3"};
  std::normal_distribution<double> noise(0.0, 0.5);
  for (int c = 0; c < 2; ++c)
    for (size_t i = 0; i < per_class; ++i) {
      d.X.push_back({c * 5.0 + noise(rng), noise(rng), noise(rng), noise(rng)});
      d.y.push_back(c);
    }
  return d;
}

Points gaussian_blobs(Rng& rng, const Points& centers, double sigma,
                      size_t per_blob) {
  std::normal_distribution<double> noise(0.0, sigma);
  Points pts;
  for (const auto& c : centers)
    for (size_t i = 0; i < per_blob; ++i) {
      std::vector<double> p(c);
      for (auto& v : p) v += noise(rng);
      pts.push_back(p);
    }
  return pts;
}

double training_accuracy(const Model& m, const Dataset& d) {
  double correct = 0;
  for (size_t i = 0; i < d.n(); ++i)
    correct += m.predict(d.X[i]) == d.y[i] ? 1.0 : 0.0;
  return correct / static_cast<double>(d.n());
}

}  // namespace

TEST_CASE("every classifier separates a linearly separable toy set") {
  Rng data_rng(1);
  auto d = separable_2class(data_rng);
  for (ModelKind kind : kAllKinds) {
    Rng rng(7);
    auto m = train(kind, d, {}, rng);
    INFO("kind " << static_cast<int>(kind));
    CHECK(training_accuracy(m, d) == 1.0);
  }
}

TEST_CASE("train rejects degenerate datasets") {
  Rng rng(0);
  Dataset one_class;
  one_class.X = {{1.0}, {2.0}, {3.0}};
  one_class.y = {0, 0, 0};
  CHECK_THROWS_AS(train(ModelKind::kRandomForest, one_class, {}, rng), Error);
  Dataset lonely;
  lonely.X = {{1.0}, {2.0}, {3.0}};
  lonely.y = {0, 0, 1};  // class 1 has a single row
  CHECK_THROWS_AS(train(ModelKind::kNaiveBayes, lonely, {}, rng), Error);
}

TEST_CASE("random labels stay near chance under cross-validation") {
  std::vector<double> accs;
  for (unsigned seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    Dataset d;
    std::uniform_real_distribution<double> val(0.0, 1.0);
    std::bernoulli_distribution label(0.5);
    for (int i = 0; i < 60; ++i) {
      d.X.push_back({val(rng), val(rng), val(rng)});
      d.y.push_back(label(rng) ? 1 : 0);
    }
    Hyperparams hp;
    hp.n_trees = 30;
    accs.push_back(
        kfold_cv(ModelKind::kRandomForest, d, 10, rng, hp).accuracy);
  }
  double med = stats::median(accs);
  CHECK(med >= 0.35);
  CHECK(med <= 0.65);
}

TEST_CASE("cross-validation on perfect features reports all ones") {
  Rng rng(3);
  Dataset d;
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int i = 0; i < 45; ++i) {
    int label = i % 3;
    d.X.push_back({static_cast<double>(label), noise(rng)});
    d.y.push_back(label);
  }
  auto rep = kfold_cv(ModelKind::kRandomForest, d, 5, rng);
  CHECK(rep.accuracy == 1.0);
  CHECK(rep.precision == 1.0);
  CHECK(rep.recall == 1.0);
  CHECK(rep.f1 == 1.0);
  CHECK(rep.auc == 1.0);
  CHECK(rep.overall ==
        Catch::Approx(0.25 * (rep.accuracy + rep.precision + rep.recall +
                              rep.f1))
            .margin(1e-12));
}

TEST_CASE("metrics match a hand-computed confusion matrix") {
  // 20 rows: class 0 -> 10 right + 2 wrong, class 1 -> 6 right + 2 wrong.
  std::vector<int> y_true, y_pred;
  for (int i = 0; i < 10; ++i) { y_true.push_back(0); y_pred.push_back(0); }
  for (int i = 0; i < 2; ++i) { y_true.push_back(0); y_pred.push_back(1); }
  for (int i = 0; i < 6; ++i) { y_true.push_back(1); y_pred.push_back(1); }
  for (int i = 0; i < 2; ++i) { y_true.push_back(1); y_pred.push_back(0); }
  auto rep = evaluate(y_true, y_pred, {}, {0, 1});
  CHECK(rep.accuracy == Catch::Approx(16.0 / 20.0).margin(1e-12));
  // class 0: precision 10/12, recall 10/12; class 1: precision 6/8, recall 6/8
  double p0 = 10.0 / 12.0, p1 = 6.0 / 8.0;
  CHECK(rep.precision == Catch::Approx(0.5 * (p0 + p1)).margin(1e-12));
  CHECK(rep.recall == Catch::Approx(0.5 * (p0 + p1)).margin(1e-12));
  CHECK(rep.f1 == Catch::Approx(0.5 * (p0 + p1)).margin(1e-12));
  CHECK(rep.overall ==
        Catch::Approx(0.25 * (rep.accuracy + rep.precision + rep.recall +
                              rep.f1))
            .margin(1e-12));
}

TEST_CASE("AUC matches the pairwise comparison count") {
  std::vector<int> y_true = {0, 0, 1, 1};
  std::vector<int> y_pred = {0, 0, 1, 1};
  std::vector<std::vector<double>> scores = {
      {0.9, 0.1}, {0.6, 0.4}, {0.65, 0.35}, {0.2, 0.8}};
  auto rep = evaluate(y_true, y_pred, scores, {0, 1});
  CHECK(rep.auc == Catch::Approx(0.75).margin(1e-12));
}

TEST_CASE("ensemble training accuracy beats every member tree") {
  Rng data_rng(5);
  auto d = separable_2class(data_rng);
  Rng rng(11);
  auto m = train(ModelKind::kRandomForest, d, {}, rng);
  double ensemble = training_accuracy(m, d);
  for (const auto& tree : m.trees) {
    double tree_acc = 0;
    for (size_t i = 0; i < d.n(); ++i) {
      const auto& v = tree.predict_row(d.X[i]);
      int pred = v[1] > v[0] ? 1 : 0;
      tree_acc += pred == d.y[i] ? 1.0 : 0.0;
    }
    tree_acc /= static_cast<double>(d.n());
    REQUIRE(ensemble >= tree_acc);
  }
}

TEST_CASE("seeded determinism for every model kind") {
  Rng data_rng(13);
  auto d = separable_2class(data_rng);
  for (ModelKind kind : kAllKinds) {
    Rng a(21), b(21);
    auto ma = train(kind, d, {}, a);
    auto mb = train(kind, d, {}, b);
    REQUIRE(ma.to_json().dump() == mb.to_json().dump());
  }
}

TEST_CASE("model save and load round trip preserves predictions") {
  Rng data_rng(2);
  auto d = separable_2class(data_rng);
  for (ModelKind kind : kAllKinds) {
    Rng rng(9);
    auto m = train(kind, d, {}, rng);
    std::stringstream ss;
    m.save(ss);
    auto loaded = Model::load(ss);
    for (size_t i = 0; i < d.n(); ++i)
      REQUIRE(loaded.predict(d.X[i]) == m.predict(d.X[i]));
  }
}

TEST_CASE("GMM log-likelihood is non-decreasing across EM iterations") {
  Rng rng(4);
  auto pts = gaussian_blobs(rng, {{0, 0}, {1, 0}, {0, 1}}, 0.1, 40);
  for (int k : {2, 3, 5}) {
    auto g = gmm_fit(pts, k, rng);
    REQUIRE(g.loglik_history.size() >= 2);
    for (size_t i = 1; i < g.loglik_history.size(); ++i)
      REQUIRE(g.loglik_history[i] >= g.loglik_history[i - 1] - 1e-9);
  }
}

TEST_CASE("all six estimators find three separated blobs") {
  Rng rng(6);
  auto pts = gaussian_blobs(rng, {{0, 0}, {1, 0}, {0, 1}}, 0.1, 40);
  for (ClusterMethod method :
       {ClusterMethod::kKmeansElbow, ClusterMethod::kKmeansSilhouette,
        ClusterMethod::kHierarchicalSilhouette, ClusterMethod::kGmmBic,
        ClusterMethod::kGmmAic, ClusterMethod::kXmeans}) {
    Rng mrng(17);
    auto est = cluster_count_estimate(pts, method, mrng);
    INFO("method " << static_cast<int>(method));
    CHECK(est.k == 3);
    CHECK_FALSE(est.low_confidence);
  }
  // Silhouette oracle: the 3-way split scores far above its neighbors.
  Rng srng(8);
  double s3 = silhouette(pts, kmeans(pts, 3, srng).assign, 3);
  double s2 = silhouette(pts, kmeans(pts, 2, srng).assign, 2);
  double s4 = silhouette(pts, kmeans(pts, 4, srng).assign, 4);
  CHECK(s3 > s2);
  CHECK(s3 > s4);
  CHECK(s3 > 0.7);
}

TEST_CASE("a single blob yields the minimum k with low confidence") {
  Rng rng(10);
  auto pts = gaussian_blobs(rng, {{0, 0}}, 0.1, 80);
  for (ClusterMethod method :
       {ClusterMethod::kKmeansElbow, ClusterMethod::kKmeansSilhouette,
        ClusterMethod::kHierarchicalSilhouette, ClusterMethod::kGmmBic,
        ClusterMethod::kGmmAic, ClusterMethod::kXmeans}) {
    Rng mrng(23);
    auto est = cluster_count_estimate(pts, method, mrng);
    INFO("method " << static_cast<int>(method));
    CHECK(est.k == 2);
    CHECK(est.low_confidence);
  }
}

TEST_CASE("cluster estimation rejects too few points") {
  Points pts(5, {0.0, 0.0});
  Rng rng(1);
  CHECK_THROWS_AS(
      cluster_count_estimate(pts, ClusterMethod::kKmeansElbow, rng), Error);
}
