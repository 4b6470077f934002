#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "lumigroup/semlog.hpp"

using namespace lumigroup;
using namespace lumigroup::semlog;

namespace {

AssociationLog truncated(const AssociationLog& log, int days) {
  AssociationLog out;
  for (const auto& e : log)
    if (e.day() < days) out.push_back(e);
  return out;
}

bool start_allowed(const AssociationLogEntry& e, GroupClass c,
                   const GeneratorConfig& cfg) {
  DayKind dk = day_kind(e.day(), cfg.holidays);
  for (const auto& rule : class_rules(c))
    if (rule_applies(rule, dk) && slot_contains(rule.slot, e.hour()))
      return true;
  return false;
}

}  // namespace

TEST_CASE("every generated encounter respects its class calendar rules") {
  Rng rng(3);
  GeneratorConfig cfg;
  auto log = generate_log(testbed("dense"), rng, cfg);
  REQUIRE(!log.empty());
  std::set<int> stranger_hours;
  for (const auto& e : log) {
    REQUIRE(e.device_ids.size() >= 2);
    REQUIRE(e.duration_min > 0.0);
    // All devices of an entry belong to the same group.
    GroupClass c = class_of_device(*e.device_ids.begin());
    for (const auto& d : e.device_ids) CHECK(class_of_device(d) == c);
    CHECK(start_allowed(e, c, cfg));
    if (c == GroupClass::kWellknownStranger)
      stranger_hours.insert(static_cast<int>(e.hour()));
    CHECK(e.day() >= 0);
    CHECK(e.day() < cfg.days);
  }
  // Strangers are met at any time of day over a full year.
  CHECK(stranger_hours.size() == 24);
}

TEST_CASE("dense testbed durations stay in the specified range") {
  Rng rng(9);
  GeneratorConfig cfg;
  cfg.days = 56;
  auto log = generate_log(testbed("dense"), rng, cfg);
  std::set<std::string> devices;
  for (const auto& e : log) {
    CHECK(e.duration_min >= 30.0);
    CHECK(e.duration_min <= 180.0);
    devices.insert(e.device_ids.begin(), e.device_ids.end());
  }
  CHECK(devices.size() == 27);  // 9 per class
}

TEST_CASE("cleaning drops singletons and duplicates and is idempotent") {
  AssociationLogEntry pair{100, 10.0, {"P0", "P1"}};
  AssociationLogEntry solo{200, 10.0, {"P0"}};
  AssociationLog dirty{pair, solo, pair};
  auto cleaned = clean_log(dirty);
  REQUIRE(cleaned.size() == 1);
  CHECK(cleaned[0] == pair);
  CHECK(clean_log(cleaned) == cleaned);
}

TEST_CASE("calendar slots carry the fixed hour ranges") {
  CHECK(slot_hours(SlotId::kAll).begin_h == 0);
  CHECK(slot_hours(SlotId::kAll).end_h == 24);
  CHECK(slot_hours(SlotId::kNightMorning).end_h == 5);
  CHECK(slot_hours(SlotId::kMorning).begin_h == 5);
  CHECK(slot_hours(SlotId::kMorning).end_h == 10);
  CHECK(slot_hours(SlotId::kForenoon).end_h == 12);
  CHECK(slot_hours(SlotId::kNoon).end_h == 14);
  CHECK(slot_hours(SlotId::kAfternoon).end_h == 17);
  CHECK(slot_hours(SlotId::kEvening).end_h == 21);
  CHECK(slot_hours(SlotId::kEveningNight).begin_h == 21);
  CHECK(slot_hours(SlotId::kEveningNight).end_h == 24);
  // Day 0 (Monday 2024-01-01) is a configured holiday; day 5 is a
  // Saturday, day 1 a plain workday.
  GeneratorConfig cfg;
  CHECK(day_kind(0, cfg.holidays) == DayKind::kHoliday);
  CHECK(day_kind(5, cfg.holidays) == DayKind::kWeekend);
  CHECK(day_kind(6, cfg.holidays) == DayKind::kWeekend);
  CHECK(day_kind(1, cfg.holidays) == DayKind::kWorkday);
}

TEST_CASE("the 43 feature set names are stable") {
  auto names = feature_set_names();
  REQUIRE(names.size() == 43);
  std::set<std::string> unique(names.begin(), names.end());
  CHECK(unique.size() == 43);
  CHECK(names.front() == "grouping time per event");
  CHECK(names.back() == "combined");
  CHECK(unique.count("contact frequency per week - sum") == 1);
  CHECK(unique.count("time ratio per day - std") == 1);
  CHECK(names == feature_set_names());
}

TEST_CASE("feature extraction matches hand arithmetic on a small log") {
  AssociationLog log{
      {0 * 1440 + 480, 60.0, {"P0", "P1"}},
      {2 * 1440 + 780, 30.0, {"P0", "P1"}},
      {10 * 1440 + 780, 100.0, {"P0", "P2"}},
  };
  auto sets = extract_feature_sets(log, "P0", 14);
  REQUIRE(sets.size() == 43);
  std::map<std::string, std::vector<double>> by_name;
  for (const auto& fs : sets) {
    by_name[fs.name] = fs.values;
    if (fs.name == "combined")
      CHECK(fs.values.size() == 10);
    else
      CHECK(fs.values.size() == 3);
  }
  // Windows: last week sees only the day-10 event; the 4-week and
  // all-history windows clip to the full 14 days.
  auto& per_event = by_name.at("grouping time per event");
  CHECK(per_event[0] == Catch::Approx(100.0));
  CHECK(per_event[1] == Catch::Approx(190.0 / 3.0));
  CHECK(per_event[2] == Catch::Approx(190.0 / 3.0));
  auto& per_week = by_name.at("grouping time per week");
  CHECK(per_week[0] == Catch::Approx(100.0));
  CHECK(per_week[1] == Catch::Approx(95.0));
  auto& freq_day = by_name.at("contact frequency per day");
  CHECK(freq_day[0] == Catch::Approx(1.0 / 7.0));
  CHECK(freq_day[1] == Catch::Approx(3.0 / 14.0));
  auto& ratio = by_name.at("time ratio per day");
  CHECK(ratio[1] == Catch::Approx(190.0 / (14.0 * 1440.0)));
  auto& sum = by_name.at("grouping time per event - sum");
  CHECK(sum == std::vector<double>{100.0, 190.0, 190.0});
  auto& mn = by_name.at("grouping time per event - min");
  CHECK(mn == std::vector<double>{100.0, 30.0, 30.0});
  auto& wk_mean = by_name.at("contact frequency per week - mean");
  CHECK(wk_mean[0] == Catch::Approx(1.0));
  CHECK(wk_mean[1] == Catch::Approx(1.5));
  auto& combined = by_name.at("combined");
  CHECK(combined[7] == Catch::Approx(3.0));    // total encounters
  CHECK(combined[8] == Catch::Approx(190.0));  // total minutes
  CHECK(combined[9] == Catch::Approx(3.0));    // active days

  // P2 only appears once; a device absent from the window gets zeros.
  auto quiet = extract_feature_sets(log, "P2", 7);
  for (const auto& fs : quiet)
    for (double v : fs.values) CHECK(v == 0.0);

  CHECK_THROWS_AS(extract_feature_sets(log, "P9", 14), Error);
  CHECK_THROWS_AS(extract_feature_sets(log, "P0", 3), Error);
}

TEST_CASE("naive bayes on weekly contact frequency crosses cold start") {
  Rng rng(1);
  GeneratorConfig cfg;
  cfg.days = 120;
  auto log = generate_log(testbed("dense"), rng, cfg);
  auto res = classify_and_coldstart(log, ModelKind::kNaiveBayes,
                                    "contact frequency per week - sum", 7);
  CHECK_FALSE(res.never_cold);
  CHECK(res.accepted);
  CHECK(res.cold_start_day <= 40);
  CHECK(res.final_report.f1 >= 0.85);
  CHECK(res.final_report.accuracy >= 0.8);

  // More training days never push the cold start later.
  auto r60 = classify_and_coldstart(truncated(log, 60), ModelKind::kNaiveBayes,
                                    "contact frequency per week - sum", 7);
  auto r90 = classify_and_coldstart(truncated(log, 90), ModelKind::kNaiveBayes,
                                    "contact frequency per week - sum", 7);
  REQUIRE_FALSE(r60.never_cold);
  REQUIRE_FALSE(r90.never_cold);
  CHECK(r90.cold_start_day <= r60.cold_start_day);
  CHECK(res.cold_start_day <= r90.cold_start_day);

  CHECK_THROWS_AS(classify_and_coldstart(truncated(log, 20),
                                         ModelKind::kNaiveBayes,
                                         "contact frequency per week - sum", 7),
                  Error);
}

TEST_CASE("mixture groups cluster worse than single classes") {
  GeneratorConfig cfg;
  cfg.days = 120;
  Rng rng(1);
  auto tb = testbed("dense");
  auto log = generate_log(tb, rng, cfg);
  std::map<std::string, int> single_groups;
  for (GroupClass c : all_classes())
    for (int i = 0; i < tb.devices_per_group; ++i)
      single_groups[device_name(c, i)] = static_cast<int>(c);
  std::vector<mlkit::ClusterMethod> methods = {
      mlkit::ClusterMethod::kKmeansElbow,
      mlkit::ClusterMethod::kKmeansSilhouette,
      mlkit::ClusterMethod::kHierarchicalSilhouette,
      mlkit::ClusterMethod::kGmmBic,
      mlkit::ClusterMethod::kGmmAic,
      mlkit::ClusterMethod::kXmeans};
  double single = cluster_over_time(log, single_groups, 84, methods, 5);
  Rng rng2(2);
  auto mix = generate_mixture_log(tb, rng2, cfg);
  REQUIRE(mix.group_of.size() == 7 * 9);
  double mixture = cluster_over_time(mix.log, mix.group_of, 84, methods, 5);
  CHECK(single >= 0.5);
  CHECK(mixture < single);
  CHECK_THROWS_AS(cluster_over_time(log, single_groups, 3, methods, 5), Error);
}

TEST_CASE("cross-testbed grid returns the best scoring pair") {
  GeneratorConfig cfg;
  cfg.days = 60;
  Rng rng(4);
  auto dense = generate_log(testbed("dense"), rng, cfg);
  auto sparse = generate_log(testbed("sparse"), rng, cfg);
  std::vector<std::string> feats = {"contact frequency per week - sum",
                                    "grouping time per day"};
  auto cross = cross_testbed(dense, sparse, {ModelKind::kNaiveBayes}, feats, 11);
  CHECK(cross.kind == ModelKind::kNaiveBayes);
  CHECK((cross.feature_name == feats[0] || cross.feature_name == feats[1]));
  // Matching train and test conditions beat any cross pairing; device
  // density shifts the contact-frequency scale between testbeds.
  auto same = cross_testbed(sparse, sparse, {ModelKind::kNaiveBayes}, feats, 11);
  CHECK(same.report.recall >= cross.report.recall);
  CHECK(same.report.recall > 0.8);
}

TEST_CASE("log CSV round trips through ISO-8601 timestamps") {
  CHECK(iso8601_from_minutes(0) == "2024-01-01T00:00:00");
  CHECK(iso8601_from_minutes(60 * 1440) == "2024-03-01T00:00:00");  // leap year
  CHECK(iso8601_from_minutes(3 * 1440 + 13 * 60 + 7) == "2024-01-04T13:07:00");
  CHECK(minutes_from_iso8601("2024-01-04T13:07:00") == 3 * 1440 + 13 * 60 + 7);
  CHECK_THROWS_AS(minutes_from_iso8601("not-a-date"), Error);

  Rng rng(6);
  GeneratorConfig cfg;
  cfg.days = 14;
  auto log = generate_log(testbed("sparse"), rng, cfg);
  std::ostringstream os;
  write_log_csv(log, os);
  std::istringstream is(os.str());
  auto back = read_log_csv(is);
  CHECK(back == log);
}
