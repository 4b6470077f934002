#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "lumigroup/simulator.hpp"

using namespace lumigroup;
using namespace lumigroup::simulator;

TEST_CASE("pairwise evaluation matches hand-computed fixtures") {
  // Perfect prediction: every metric is 1 (group ids may differ).
  std::map<std::string, int> truth{{"a", 0}, {"b", 0}, {"c", 1}, {"d", 2}};
  std::map<std::string, int> relabeled{{"a", 7}, {"b", 7}, {"c", 3}, {"d", 9}};
  auto r = evaluate_pairwise(relabeled, truth);
  CHECK(r.accuracy == 1.0);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.f1 == 1.0);
  CHECK(r.overall == 1.0);

  // All four clients lumped together against singleton truth: the six
  // pairs are all false positives; recall is vacuous (no true pairs).
  std::map<std::string, int> singles{{"a", 0}, {"b", 1}, {"c", 2}, {"d", 3}};
  std::map<std::string, int> lumped{{"a", 5}, {"b", 5}, {"c", 5}, {"d", 5}};
  auto r2 = evaluate_pairwise(lumped, singles);
  CHECK(r2.accuracy == 0.0);
  CHECK(r2.precision == 0.0);
  CHECK(r2.recall == 1.0);
  CHECK(r2.f1 == 0.0);
  CHECK(r2.overall == 0.25);
}

TEST_CASE("label evaluation macro-averages over the class union") {
  std::map<std::string, std::string> truth{
      {"k1", "A"}, {"k2", "A"}, {"k3", "B"}, {"k4", "B"}, {"k5", "C"}};
  std::map<std::string, std::string> pred{
      {"k1", "A"}, {"k2", "B"}, {"k3", "B"}, {"k4", "B"}, {"k5", "C"}};
  auto r = evaluate_labels(pred, truth);
  // A: prec 1, rec 1/2, f1 2/3. B: prec 2/3, rec 1, f1 4/5. C: all 1.
  CHECK(r.accuracy == Catch::Approx(0.8));
  CHECK(r.precision == Catch::Approx(8.0 / 9.0));
  CHECK(r.recall == Catch::Approx(5.0 / 6.0));
  CHECK(r.f1 == Catch::Approx(37.0 / 45.0));
  CHECK(r.overall ==
        Catch::Approx((0.8 + 8.0 / 9.0 + 5.0 / 6.0 + 37.0 / 45.0) / 4.0));
}

TEST_CASE("evaluation rejects mismatched client universes") {
  std::map<std::string, int> truth{{"a", 0}, {"b", 1}};
  std::map<std::string, int> missing{{"a", 0}};
  std::map<std::string, int> renamed{{"a", 0}, {"z", 1}};
  CHECK_THROWS_AS(evaluate_pairwise(missing, truth), Error);
  CHECK_THROWS_AS(evaluate_pairwise(renamed, truth), Error);
  std::map<std::string, std::string> lt{{"a", "x"}};
  std::map<std::string, std::string> lp{{"b", "x"}};
  CHECK_THROWS_AS(evaluate_labels(lp, lt), Error);
}

TEST_CASE("room layout distances are a metric table") {
  auto l = build_layout(7);
  REQUIRE(l.rooms() == 7);
  for (size_t i = 0; i < 7; ++i) {
    CHECK(l.dist[i][i] == 0.0);
    for (size_t j = 0; j < 7; ++j) {
      CHECK(l.dist[i][j] == l.dist[j][i]);
      double d = std::hypot(l.centers[i].first - l.centers[j].first,
                            l.centers[i].second - l.centers[j].second);
      CHECK(l.dist[i][j] == Catch::Approx(d));
    }
  }
}

TEST_CASE("random paths respect the schedule invariants") {
  auto layout = build_layout(5);
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = random_path(600.0, layout, rng);
    REQUIRE(p.visits.size() >= 3);
    REQUIRE(p.visits.size() <= 8);
    REQUIRE(p.transit_s.size() == p.visits.size() - 1);
    REQUIRE(p.speeds_mps.size() == p.transit_s.size());
    CHECK(std::abs(p.total_s() - 600.0) <= 1.0);
    for (size_t i = 0; i < p.visits.size(); ++i) {
      CHECK(p.visits[i].dwell_s > 0.0);
      if (i > 0) CHECK(p.visits[i].room != p.visits[i - 1].room);
    }
    for (double v : p.speeds_mps) {
      CHECK(v >= 1.25);
      CHECK(v <= 1.53);
    }
  }
  // Single-room floors have no corridor time at all.
  auto solo = random_path(600.0, build_layout(1), rng);
  REQUIRE(solo.visits.size() == 1);
  CHECK(solo.visits[0].dwell_s == 600.0);
  CHECK(solo.room_at(300.0) == 0);
}

TEST_CASE("first visited room is uniform over the layout") {
  auto layout = build_layout(5);
  Rng rng(23);
  std::vector<int> counts(5, 0);
  const int draws = 1000;
  for (int i = 0; i < draws; ++i)
    ++counts[random_path(600.0, layout, rng).visits[0].room];
  double chi2 = 0.0;
  double expect = draws / 5.0;
  for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
  // Critical value for df=4 at p=0.01.
  CHECK(chi2 < 13.28);
}

TEST_CASE("stable_room detects any movement inside the interval") {
  MobilityPath p;
  p.visits = {{0, 10.0}, {1, 10.0}};
  p.speeds_mps = {1.4};
  p.transit_s = {5.0};
  CHECK(p.stable_room(2.0, 8.0) == 0);
  CHECK_FALSE(p.stable_room(8.0, 12.0).has_value());   // enters the corridor
  CHECK_FALSE(p.stable_room(9.0, 16.0).has_value());   // spans the transit
  CHECK(p.stable_room(16.0, 24.0) == 1);
  CHECK(p.stable_room(20.0, 30.0) == 1);  // rests in the last room
  CHECK_FALSE(p.room_at(12.0).has_value());

  // Sampled agreement with room_at on random paths.
  auto layout = build_layout(4);
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto path = random_path(400.0, layout, rng);
    std::uniform_real_distribution<double> pick(0.0, 380.0);
    for (int k = 0; k < 20; ++k) {
      double t0 = pick(rng);
      double t1 = t0 + 20.0;
      auto stable = path.stable_room(t0, t1);
      bool moved = false;
      auto first = path.room_at(t0);
      for (double t = t0; t <= t1; t += 0.25)
        if (path.room_at(t) != first) moved = true;
      if (stable) {
        CHECK_FALSE(moved);
        CHECK(first == stable);
      } else if (first) {
        CHECK(moved);
      }
    }
  }
}

TEST_CASE("scenario validation rejects out-of-range configs") {
  ScenarioConfig c;
  c.mode = SimMode::kStatic;
  c.users = 1;
  CHECK_THROWS_AS(validate_config(c), Error);
  c.users = 4;
  c.pattern_lengths = {3};
  CHECK_THROWS_AS(validate_config(c), Error);
  c.pattern_lengths = {4};
  c.rooms = 2;
  CHECK_THROWS_AS(validate_config(c), Error);
  c.rooms = 1;
  CHECK_NOTHROW(validate_config(c));
  ScenarioConfig d;
  d.mode = SimMode::kDynamic;
  d.users = 4;  // dynamic sweep uses 3, 5 or 10
  CHECK_THROWS_AS(validate_config(d), Error);
  d.users = 5;
  d.grouping_period_s = 15.0;
  CHECK_THROWS_AS(validate_config(d), Error);
  d.grouping_period_s = 20.0;
  CHECK_NOTHROW(validate_config(d));
}

namespace {

std::string report_text(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  write_report_csv(rows, os);
  return os.str();
}

void check_report_sane(const ReportRow& row) {
  for (double v : {row.report.accuracy, row.report.precision,
                   row.report.recall, row.report.f1}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(row.report.overall ==
        Catch::Approx((row.report.accuracy + row.report.precision +
                       row.report.recall + row.report.f1) /
                      4.0));
  CHECK(row.runtime_s > 0.0);
  CHECK(row.receive_fraction > 0.0);
  CHECK(row.receive_fraction <= 1.0);
}

}  // namespace

TEST_CASE("static simulation is deterministic and well-formed") {
  ScenarioConfig c;
  c.mode = SimMode::kStatic;
  c.users = 4;
  c.rounds = 3;
  c.seed = 5;
  c.techniques = {"pearson", "dtw"};
  auto rows = run_static(c);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    CHECK(row.feature_type == "light_signal");
    check_report_sane(row);
  }
  CHECK(report_text(rows) == report_text(run_static(c)));
}

TEST_CASE("dynamic simulation is deterministic and well-formed") {
  ScenarioConfig c;
  c.mode = SimMode::kDynamic;
  c.users = 3;
  c.rooms = 3;
  c.iteration_s = 200.0;
  c.seed = 9;
  c.techniques = {"pearson", "cbf"};
  auto rows = run_dynamic(c);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].technique == "pearson");
  CHECK(rows[0].feature_type == "light_signal");
  CHECK(rows[1].technique == "cbf");
  CHECK(rows[1].feature_type == "wifi_fingerprint");
  for (const auto& row : rows) check_report_sane(row);
  CHECK(report_text(rows) == report_text(run_dynamic(c)));
}
