#pragma once

#include <array>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "lumigroup/mlkit.hpp"

namespace lumigroup {
namespace semlog {

// --- calendar model ---

enum class SlotId {
  kAll,
  kNightMorning,
  kMorning,
  kForenoon,
  kNoon,
  kAfternoon,
  kEvening,
  kEveningNight,
};

struct SlotHours {
  double begin_h = 0.0;
  double end_h = 24.0;
};

inline SlotHours slot_hours(SlotId s) {
  switch (s) {
    case SlotId::kAll: return {0, 24};
    case SlotId::kNightMorning: return {0, 5};
    case SlotId::kMorning: return {5, 10};
    case SlotId::kForenoon: return {10, 12};
    case SlotId::kNoon: return {12, 14};
    case SlotId::kAfternoon: return {14, 17};
    case SlotId::kEvening: return {17, 21};
    case SlotId::kEveningNight: return {21, 24};
  }
  return {0, 24};
}

enum class DayKind { kAll, kHoliday, kWeekend, kWorkday };

struct CalendarSlot {
  DayKind day_kind = DayKind::kAll;
  SlotId slot = SlotId::kAll;
};

enum class GroupClass {
  kPersonal = 0,
  kFamilyFriends = 1,
  kWellknownStranger = 2,
};

inline const std::array<GroupClass, 3>& all_classes() {
  static const std::array<GroupClass, 3> c = {GroupClass::kPersonal,
                                              GroupClass::kFamilyFriends,
                                              GroupClass::kWellknownStranger};
  return c;
}

// Personal and family devices are met around the owner's daily
// routine; well-known and stranger devices can turn up at any time.
inline const std::vector<CalendarSlot>& class_rules(GroupClass c) {
  static const std::vector<CalendarSlot> routine = {
      {DayKind::kWorkday, SlotId::kMorning},
      {DayKind::kWorkday, SlotId::kEvening},
      {DayKind::kAll, SlotId::kNoon},
      {DayKind::kAll, SlotId::kAfternoon},
      {DayKind::kAll, SlotId::kEvening},
  };
  static const std::vector<CalendarSlot> any = {{DayKind::kAll, SlotId::kAll}};
  return c == GroupClass::kWellknownStranger ? any : routine;
}

// Simulation epoch: day 0 is Monday 2024-01-01.
inline DayKind day_kind(int day, const std::vector<int>& holidays) {
  for (int h : holidays)
    if (h == day) return DayKind::kHoliday;
  int weekday = ((day % 7) + 7) % 7;  // 0 = Monday
  return weekday >= 5 ? DayKind::kWeekend : DayKind::kWorkday;
}

inline bool rule_applies(const CalendarSlot& rule, DayKind dk) {
  return rule.day_kind == DayKind::kAll || rule.day_kind == dk;
}

inline bool slot_contains(SlotId slot, double hour) {
  auto h = slot_hours(slot);
  return hour >= h.begin_h && hour < h.end_h;
}

// --- log entries ---

struct AssociationLogEntry {
  std::int64_t start_min = 0;  // minutes since the simulation epoch
  double duration_min = 0.0;
  std::set<std::string> device_ids;

  int day() const { return static_cast<int>(start_min / 1440); }
  double hour() const { return static_cast<double>(start_min % 1440) / 60.0; }
  friend auto operator<=>(const AssociationLogEntry&,
                          const AssociationLogEntry&) = default;
};

using AssociationLog = std::vector<AssociationLogEntry>;

// Entries with fewer than two devices carry no association and exact
// duplicates are recording artifacts; both are dropped. Idempotent.
inline AssociationLog clean_log(AssociationLog log) {
  std::sort(log.begin(), log.end());
  log.erase(std::unique(log.begin(), log.end()), log.end());
  log.erase(std::remove_if(log.begin(), log.end(),
                           [](const AssociationLogEntry& e) {
                             return e.device_ids.size() < 2;
                           }),
            log.end());
  return log;
}

// --- testbeds and generation ---

struct TestbedSpec {
  std::string name;
  int devices_per_group = 3;
  std::pair<double, double> duration_range_min = {10.0, 60.0};
};

inline TestbedSpec testbed(const std::string& name) {
  if (name == "sparse") return {"sparse", 3, {10.0, 60.0}};
  if (name == "medium") return {"medium", 6, {20.0, 120.0}};
  if (name == "dense") return {"dense", 9, {30.0, 180.0}};
  fail(ErrorCode::NotFound, "unknown testbed: " + name);
}

struct GeneratorConfig {
  int days = 365;
  // Weekly encounter count ranges per class. Personal devices are met
  // most often, strangers rarely; the gaps keep the classes learnable.
  std::array<std::pair<int, int>, 3> weekly_encounters = {
      {{7, 10}, {4, 6}, {1, 3}}};
  // Ten fixed public holidays (day indices from the epoch Monday).
  std::vector<int> holidays = {0, 88, 91, 120, 128, 226, 243, 275, 359, 360};
};

inline std::string device_name(GroupClass c, int i) {
  static const char* prefix[] = {"P", "F", "S"};
  return std::string(prefix[static_cast<int>(c)]) + std::to_string(i);
}

inline GroupClass class_of_device(const std::string& id) {
  if (!id.empty()) {
    if (id[0] == 'P') return GroupClass::kPersonal;
    if (id[0] == 'F') return GroupClass::kFamilyFriends;
    if (id[0] == 'S') return GroupClass::kWellknownStranger;
  }
  fail(ErrorCode::UnknownDevice, "device id without class prefix: " + id);
}

namespace detail {

// One encounter of `device` with same-group partners, started inside a
// rule slot valid for the drawn day.
inline std::optional<AssociationLogEntry> draw_encounter(
    const std::string& device, const std::vector<std::string>& group,
    const std::vector<CalendarSlot>& rules, int day_lo, int day_hi,
    const GeneratorConfig& cfg, const TestbedSpec& tb, Rng& rng) {
  std::uniform_int_distribution<int> day_pick(day_lo, day_hi);
  int day = day_pick(rng);
  DayKind dk = day_kind(day, cfg.holidays);
  std::vector<CalendarSlot> allowed;
  for (const auto& r : rules)
    if (rule_applies(r, dk)) allowed.push_back(r);
  if (allowed.empty()) return std::nullopt;
  std::uniform_int_distribution<size_t> rule_pick(0, allowed.size() - 1);
  auto h = slot_hours(allowed[rule_pick(rng)].slot);
  std::uniform_int_distribution<std::int64_t> minute(
      static_cast<std::int64_t>(h.begin_h * 60.0),
      static_cast<std::int64_t>(h.end_h * 60.0) - 1);
  std::uniform_int_distribution<long> dur(
      std::lround(tb.duration_range_min.first),
      std::lround(tb.duration_range_min.second));
  AssociationLogEntry e;
  e.start_min = static_cast<std::int64_t>(day) * 1440 + minute(rng);
  e.duration_min = static_cast<double>(dur(rng));
  e.device_ids.insert(device);
  std::vector<std::string> others;
  for (const auto& d : group)
    if (d != device) others.push_back(d);
  std::uniform_int_distribution<size_t> n_partner(1, others.size());
  std::shuffle(others.begin(), others.end(), rng);
  size_t n = n_partner(rng);
  for (size_t i = 0; i < n; ++i) e.device_ids.insert(others[i]);
  return e;
}

inline AssociationLog generate_group_log(
    const std::vector<std::string>& group,
    const std::vector<CalendarSlot>& rules, std::pair<int, int> weekly,
    const GeneratorConfig& cfg, const TestbedSpec& tb, Rng& rng) {
  AssociationLog log;
  int weeks = cfg.days / 7;
  std::uniform_int_distribution<int> count(weekly.first, weekly.second);
  for (const auto& device : group)
    for (int w = 0; w < weeks; ++w) {
      int day_lo = w * 7;
      int day_hi = std::min(w * 7 + 6, cfg.days - 1);
      int k = count(rng);
      for (int i = 0; i < k; ++i)
        if (auto e = draw_encounter(device, group, rules, day_lo, day_hi, cfg,
                                    tb, rng))
          log.push_back(std::move(*e));
    }
  return log;
}

}  // namespace detail

// Artificial one-year association log: three single-class device
// groups whose encounters follow the class calendar rules.
inline AssociationLog generate_log(const TestbedSpec& tb, Rng& rng,
                                   const GeneratorConfig& cfg = {}) {
  if (cfg.days < 7)
    fail(ErrorCode::ConfigInvalid, "log generation needs days >= 7");
  AssociationLog log;
  for (GroupClass c : all_classes()) {
    std::vector<std::string> group;
    for (int i = 0; i < tb.devices_per_group; ++i)
      group.push_back(device_name(c, i));
    auto part = detail::generate_group_log(
        group, class_rules(c), cfg.weekly_encounters[static_cast<int>(c)], cfg,
        tb, rng);
    log.insert(log.end(), part.begin(), part.end());
  }
  return clean_log(std::move(log));
}

// Mixture variant: seven groups, one per non-empty class combination.
// A combination group obeys the union of its member rules and the
// summed encounter budget, which blurs the class boundaries.
struct MixtureLog {
  AssociationLog log;
  std::map<std::string, int> group_of;  // device -> combination index
};

inline MixtureLog generate_mixture_log(const TestbedSpec& tb, Rng& rng,
                                       const GeneratorConfig& cfg = {}) {
  if (cfg.days < 7)
    fail(ErrorCode::ConfigInvalid, "log generation needs days >= 7");
  MixtureLog out;
  int combo_index = 0;
  for (int mask = 1; mask < 8; ++mask, ++combo_index) {
    std::vector<CalendarSlot> rules;
    std::pair<int, int> weekly{0, 0};
    for (int c = 0; c < 3; ++c) {
      if (!(mask & (1 << c))) continue;
      auto& r = class_rules(static_cast<GroupClass>(c));
      rules.insert(rules.end(), r.begin(), r.end());
      weekly.first += cfg.weekly_encounters[c].first;
      weekly.second += cfg.weekly_encounters[c].second;
    }
    std::vector<std::string> group;
    for (int i = 0; i < tb.devices_per_group; ++i)
      group.push_back("M" + std::to_string(combo_index) + "_" +
                      std::to_string(i));
    for (const auto& d : group) out.group_of[d] = combo_index;
    auto part =
        detail::generate_group_log(group, rules, weekly, cfg, tb, rng);
    out.log.insert(out.log.end(), part.begin(), part.end());
  }
  out.log = clean_log(std::move(out.log));
  return out;
}

// --- feature extraction ---

struct FeatureSet {
  std::string name;
  std::vector<double> values;  // 3 windowed values, 10 for "combined"
};

inline const std::vector<std::string>& base_feature_names() {
  static const std::vector<std::string> n = {
      "grouping time per event", "grouping time per day",
      "grouping time per week",  "contact frequency per day",
      "contact frequency per week", "time ratio per day",
      "time ratio per week"};
  return n;
}

inline std::vector<std::string> feature_set_names() {
  std::vector<std::string> names = base_feature_names();
  static const char* aggs[] = {"sum", "mean", "std", "min", "max"};
  for (const auto& base : base_feature_names())
    for (const char* a : aggs) names.push_back(base + " - " + std::string(a));
  names.push_back("combined");
  return names;
}

namespace detail {

struct Series {
  double sum = 0.0;
  std::vector<double> values;

  void push(double v) {
    sum += v;
    values.push_back(v);
  }
  double mean() const { return stats::mean(values); }
  double std_dev() const { return stats::stddev(values); }
  double min() const {
    return values.empty()
               ? 0.0
               : *std::min_element(values.begin(), values.end());
  }
  double max() const {
    return values.empty()
               ? 0.0
               : *std::max_element(values.begin(), values.end());
  }
  double agg(int which) const {
    switch (which) {
      case 0: return sum;
      case 1: return mean();
      case 2: return std_dev();
      case 3: return min();
      case 4: return max();
    }
    return 0.0;
  }
};

struct DeviceHistory {
  // Index = day; running per-day totals for the device.
  std::vector<double> day_minutes;
  std::vector<double> day_count;
  std::vector<double> event_duration;  // one value per encounter, by time
  std::vector<int> event_day;
};

inline DeviceHistory device_history(const AssociationLog& log,
                                    const std::string& device, int days) {
  DeviceHistory h;
  h.day_minutes.assign(static_cast<size_t>(days), 0.0);
  h.day_count.assign(static_cast<size_t>(days), 0.0);
  bool seen = false;
  for (const auto& e : log) {
    if (!e.device_ids.count(device)) continue;
    seen = true;
    int d = e.day();
    if (d < 0 || d >= days) continue;
    h.day_minutes[static_cast<size_t>(d)] += e.duration_min;
    h.day_count[static_cast<size_t>(d)] += 1.0;
    h.event_duration.push_back(e.duration_min);
    h.event_day.push_back(d);
  }
  if (!seen)
    fail(ErrorCode::UnknownDevice, "device not present in log: " + device);
  return h;
}

}  // namespace detail

// The 43 named feature sets of a device, evaluated over the trailing
// windows {1 week, 4 weeks, all history} ending at eval_day
// (exclusive). eval_day = -1 means the day after the last log entry.
inline std::vector<FeatureSet> extract_feature_sets(const AssociationLog& log,
                                                    const std::string& device,
                                                    int eval_day = -1) {
  int last = 0;
  for (const auto& e : log) last = std::max(last, e.day());
  if (eval_day < 0) eval_day = last + 1;
  if (eval_day < 7)
    fail(ErrorCode::TooEarly, "feature extraction needs >= 7 days");
  auto hist = detail::device_history(log, device, eval_day);

  const int windows[] = {7, 28, eval_day};
  // Per window: the seven unit series (events, days, weeks x metric).
  std::array<std::array<detail::Series, 7>, 3> series;
  std::array<std::array<double, 7>, 3> raw{};
  for (int w = 0; w < 3; ++w) {
    int span = std::min(windows[w], eval_day);
    int first_day = eval_day - span;
    auto& s = series[w];
    for (size_t i = 0; i < hist.event_duration.size(); ++i)
      if (hist.event_day[i] >= first_day) s[0].push(hist.event_duration[i]);
    for (int d = first_day; d < eval_day; ++d) {
      double m = hist.day_minutes[static_cast<size_t>(d)];
      double c = hist.day_count[static_cast<size_t>(d)];
      s[1].push(m);
      s[3].push(c);
      s[5].push(m / 1440.0);
    }
    for (int wk_end = eval_day; wk_end > first_day; wk_end -= 7) {
      double m = 0.0, c = 0.0;
      for (int d = std::max(first_day, wk_end - 7); d < wk_end; ++d) {
        m += hist.day_minutes[static_cast<size_t>(d)];
        c += hist.day_count[static_cast<size_t>(d)];
      }
      s[2].push(m);
      s[4].push(c);
      s[6].push(m / (7.0 * 1440.0));
    }
    double days_f = static_cast<double>(span);
    double total = s[1].sum;
    double count = s[3].sum;
    raw[w][0] = count > 0.0 ? total / count : 0.0;  // time per event
    raw[w][1] = total / days_f;
    raw[w][2] = total * 7.0 / days_f;
    raw[w][3] = count / days_f;
    raw[w][4] = count * 7.0 / days_f;
    raw[w][5] = total / (days_f * 1440.0);
    raw[w][6] = total / (days_f * 1440.0);
  }

  std::vector<FeatureSet> out;
  const auto& bases = base_feature_names();
  for (size_t b = 0; b < bases.size(); ++b)
    out.push_back({bases[b], {raw[0][b], raw[1][b], raw[2][b]}});
  static const char* aggs[] = {"sum", "mean", "std", "min", "max"};
  for (size_t b = 0; b < bases.size(); ++b)
    for (int a = 0; a < 5; ++a)
      out.push_back({bases[b] + " - " + aggs[a],
                     {series[0][b].agg(a), series[1][b].agg(a),
                      series[2][b].agg(a)}});
  // Ten-dimensional summary: all-history rates plus absolute totals.
  FeatureSet combined{"combined", {}};
  for (size_t b = 0; b < bases.size(); ++b)
    combined.values.push_back(raw[2][b]);
  combined.values.push_back(series[2][3].sum);  // total encounters
  combined.values.push_back(series[2][1].sum);  // total grouping minutes
  double active = 0.0;
  for (double c : series[2][3].values) active += c > 0.0 ? 1.0 : 0.0;
  combined.values.push_back(active);
  out.push_back(std::move(combined));
  return out;
}

inline FeatureSet extract_feature_set(const AssociationLog& log,
                                      const std::string& device,
                                      const std::string& name,
                                      int eval_day = -1) {
  for (auto& fs : extract_feature_sets(log, device, eval_day))
    if (fs.name == name) return fs;
  fail(ErrorCode::NotFound, "unknown feature set: " + name);
}

// --- datasets, clustering, classification ---

namespace detail {

inline std::vector<std::string> devices_in(const AssociationLog& log) {
  std::set<std::string> ids;
  for (const auto& e : log) ids.insert(e.device_ids.begin(), e.device_ids.end());
  return {ids.begin(), ids.end()};
}

}  // namespace detail

// One instance per (device, weekly anchor <= up_to_day); the label is
// the device's class. Growing anchors make the dataset cumulative.
inline Dataset build_dataset(const AssociationLog& log,
                             const std::string& feature_name, int up_to_day) {
  if (up_to_day < 7)
    fail(ErrorCode::TooEarly, "dataset needs at least one full week");
  Dataset ds;
  for (const auto& device : detail::devices_in(log)) {
    int label = static_cast<int>(class_of_device(device));
    for (int anchor = 7; anchor <= up_to_day; anchor += 7) {
      auto fs = extract_feature_set(log, device, feature_name, anchor);
      if (ds.feature_names.empty())
        for (size_t i = 0; i < fs.values.size(); ++i)
          ds.feature_names.push_back(feature_name + "[" + std::to_string(i) +
                                     "]");
      ds.X.push_back(fs.values);
      ds.y.push_back(label);
    }
  }
  return ds;
}

// Fraction of estimation methods that recover the true group count
// from per-device features at day t_days.
inline double cluster_over_time(const AssociationLog& log,
                                const std::map<std::string, int>& group_of,
                                int t_days,
                                const std::vector<mlkit::ClusterMethod>& methods,
                                unsigned seed,
                                const std::string& feature_name =
                                    "contact frequency per week") {
  if (t_days < 7) fail(ErrorCode::TooEarly, "clustering needs >= 7 days");
  if (methods.empty())
    fail(ErrorCode::ConfigInvalid, "need at least one cluster method");
  mlkit::Points points;
  std::set<int> groups;
  for (const auto& [device, group] : group_of) {
    points.push_back(extract_feature_set(log, device, feature_name, t_days)
                         .values);
    groups.insert(group);
  }
  // Standardize dimensions so duration scales do not drown counts.
  size_t dim = points.empty() ? 0 : points[0].size();
  for (size_t j = 0; j < dim; ++j) {
    std::vector<double> col;
    for (const auto& p : points) col.push_back(p[j]);
    double m = stats::mean(col);
    double sd = stats::stddev(col);
    if (sd <= 0.0) sd = 1.0;
    for (auto& p : points) p[j] = (p[j] - m) / sd;
  }
  int truth = static_cast<int>(groups.size());
  double hits = 0.0;
  for (auto method : methods) {
    Rng rng(seed + static_cast<unsigned>(method) * 7919u);
    auto est = mlkit::cluster_count_estimate(points, method, rng, 2, 9);
    if (est.k == truth && !est.low_confidence) ++hits;
  }
  return hits / static_cast<double>(methods.size());
}

struct ColdStartResult {
  EvalReport final_report;       // metrics with the full log
  int cold_start_day = -1;              // -1 when never reached
  bool never_cold = false;              // no qualifying day
  bool accepted = false;                // reached within the first quarter
  std::vector<std::pair<int, EvalReport>> history;
};

// Cumulative per-day evaluation: at each evaluation day the dataset
// covers all weekly anchors so far and is scored by stratified 10-fold
// cross-validation. Cold start is the earliest day from which all four
// metrics stay at or above 0.8; results past day 91 are rejected.
inline ColdStartResult classify_and_coldstart(const AssociationLog& log,
                                              ModelKind kind,
                                              const std::string& feature_name,
                                              unsigned seed,
                                              int eval_step_days = 7) {
  int last = 0;
  for (const auto& e : log) last = std::max(last, e.day());
  if (last + 1 < 28)
    fail(ErrorCode::TooEarly, "classification needs >= 4 weeks of data");
  ColdStartResult res;
  for (int day = 28; day <= last + 1; day += eval_step_days) {
    auto ds = build_dataset(log, feature_name, day);
    Rng rng(seed + static_cast<unsigned>(day) * 2654435761u);
    res.history.emplace_back(day, mlkit::kfold_cv(kind, ds, 10, rng));
  }
  res.final_report = res.history.back().second;
  auto sustained = [](const EvalReport& r) {
    return r.accuracy >= 0.8 && r.precision >= 0.8 && r.recall >= 0.8 &&
           r.f1 >= 0.8;
  };
  for (size_t i = res.history.size(); i-- > 0;) {
    if (!sustained(res.history[i].second)) break;
    res.cold_start_day = res.history[i].first;
  }
  res.never_cold = res.cold_start_day < 0;
  res.accepted = !res.never_cold && res.cold_start_day <= 91;
  return res;
}

struct CrossResult {
  ModelKind kind = ModelKind::kNaiveBayes;
  std::string feature_name;
  EvalReport report;
};

// Train on one testbed's log and score on another's; the winner is the
// (classifier, feature) pair with the best class-balanced recall.
inline CrossResult cross_testbed(const AssociationLog& train_log,
                                 const AssociationLog& test_log,
                                 const std::vector<ModelKind>& kinds,
                                 const std::vector<std::string>& features,
                                 unsigned seed) {
  if (kinds.empty() || features.empty())
    fail(ErrorCode::ConfigInvalid, "cross_testbed needs kinds and features");
  int train_last = 0, test_last = 0;
  for (const auto& e : train_log) train_last = std::max(train_last, e.day());
  for (const auto& e : test_log) test_last = std::max(test_last, e.day());
  CrossResult best;
  double best_score = -1.0;
  for (ModelKind kind : kinds) {
    for (const auto& feature : features) {
      auto train = build_dataset(train_log, feature, train_last + 1);
      auto test = build_dataset(test_log, feature, test_last + 1);
      Rng rng(seed);
      auto model = mlkit::train(kind, train, {}, rng);
      std::vector<int> pred;
      std::vector<std::vector<double>> scores;
      for (const auto& x : test.X) {
        pred.push_back(model.predict(x));
        scores.push_back(model.predict_scores(x));
      }
      auto rep = mlkit::evaluate(test.y, pred, scores, model.classes);
      if (rep.recall > best_score) {
        best_score = rep.recall;
        best = {kind, feature, rep};
      }
    }
  }
  return best;
}

// --- file format ---

namespace detail {

// Civil-calendar conversions (proleptic Gregorian), epoch 1970-01-01.
inline std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  unsigned yoe = static_cast<unsigned>(y - era * 400);
  unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                 static_cast<unsigned>(d) - 1u;
  unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  unsigned doe = static_cast<unsigned>(z - era * 146097);
  unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
  unsigned doy = doe - (365u * yoe + yoe / 4u - yoe / 100u);
  unsigned mp = (5u * doy + 2u) / 153u;
  d = static_cast<int>(doy - (153u * mp + 2u) / 5u + 1u);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yr + (m <= 2));
}

inline const std::int64_t kEpochDays = days_from_civil(2024, 1, 1);

}  // namespace detail

inline std::string iso8601_from_minutes(std::int64_t start_min) {
  std::int64_t day = start_min / 1440;
  std::int64_t rem = start_min % 1440;
  if (rem < 0) {
    rem += 1440;
    --day;
  }
  int y, m, d;
  detail::civil_from_days(detail::kEpochDays + day, y, m, d);
  std::ostringstream os;
  os << std::setfill('0') << std::setw(4) << y << "-" << std::setw(2) << m
     << "-" << std::setw(2) << d << "T" << std::setw(2) << rem / 60 << ":"
     << std::setw(2) << rem % 60 << ":00";
  return os.str();
}

inline std::int64_t minutes_from_iso8601(const std::string& iso) {
  if (iso.size() < 19 || iso[4] != '-' || iso[7] != '-' || iso[10] != 'T' ||
      iso[13] != ':' || iso[16] != ':')
    fail(ErrorCode::IoError, "malformed timestamp: " + iso);
  int y = std::stoi(iso.substr(0, 4));
  int m = std::stoi(iso.substr(5, 2));
  int d = std::stoi(iso.substr(8, 2));
  int hh = std::stoi(iso.substr(11, 2));
  int mm = std::stoi(iso.substr(14, 2));
  return (detail::days_from_civil(y, m, d) - detail::kEpochDays) * 1440 +
         hh * 60 + mm;
}

inline void write_log_csv(const AssociationLog& log, std::ostream& os) {
  os << "start_iso8601,duration_min,device_ids\n";
  for (const auto& e : log) {
    os << iso8601_from_minutes(e.start_min) << "," << e.duration_min << ",";
    bool first = true;
    for (const auto& d : e.device_ids) {
      if (!first) os << ";";
      os << d;
      first = false;
    }
    os << "\n";
  }
}

inline AssociationLog read_log_csv(std::istream& is) {
  AssociationLog log;
  std::string line;
  if (!std::getline(is, line)) fail(ErrorCode::IoError, "empty log file");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      fail(ErrorCode::IoError, "malformed log row: " + line);
    AssociationLogEntry e;
    e.start_min = minutes_from_iso8601(line.substr(0, c1));
    e.duration_min = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    std::stringstream ids(line.substr(c2 + 1));
    std::string id;
    while (std::getline(ids, id, ';'))
      if (!id.empty()) e.device_ids.insert(id);
    log.push_back(std::move(e));
  }
  return log;
}

}  // namespace semlog
}  // namespace lumigroup
