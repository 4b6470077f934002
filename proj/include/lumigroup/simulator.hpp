#pragma once

#include <map>
#include <optional>
#include <set>

#include "lumigroup/cycledetect.hpp"
#include "lumigroup/fingerprint.hpp"
#include "lumigroup/groupengine.hpp"
#include "lumigroup/mlkit.hpp"
#include "lumigroup/tsfeatures.hpp"

namespace lumigroup {
namespace simulator {

enum class SimMode { kStatic, kDynamic };

struct ScenarioConfig {
  SimMode mode = SimMode::kStatic;
  size_t users = 5;
  size_t rooms = 1;
  std::vector<int> pattern_lengths = {4};
  double grouping_period_s = 20.0;
  double iteration_s = 1200.0;
  std::pair<double, double> latency_range_ms = {50.0, 500.0};
  unsigned seed = 0;
  size_t rounds = 10;              // static mode only
  double sensing_window_ms = 90.0;       // static sensing window
  double sensing_ms_per_period_s = 4.5;  // dynamic duty-cycle budget
  double sensing_warmup_s = 6.0;         // per-evaluation sensing overhead
  double bleed_per_neighbor = 0.025;     // chance of sensing a neighbor room
  double noise_std_mv = 15.0;
  std::int32_t sampling_interval_us = 100;
  // Empty = every technique applicable to the mode.
  std::vector<std::string> techniques;
};

inline void validate_config(const ScenarioConfig& c) {
  if (c.iteration_s <= 0.0)
    fail(ErrorCode::ConfigInvalid, "iteration_s must be positive");
  if (c.pattern_lengths.empty())
    fail(ErrorCode::ConfigInvalid, "pattern_lengths must be non-empty");
  for (int len : c.pattern_lengths)
    if (len < 2 || len > 10 || len % 2 != 0)
      fail(ErrorCode::ConfigInvalid, "pattern length must be even in [2,10]");
  if (c.latency_range_ms.first < 0.0 ||
      c.latency_range_ms.second < c.latency_range_ms.first)
    fail(ErrorCode::ConfigInvalid, "invalid latency range");
  if (c.mode == SimMode::kStatic) {
    if (c.users < 2 || c.users > 10)
      fail(ErrorCode::ConfigInvalid, "static mode needs users in [2,10]");
    if (c.rooms != 1)
      fail(ErrorCode::ConfigInvalid, "static mode is single-room");
    if (c.rounds == 0)
      fail(ErrorCode::ConfigInvalid, "static mode needs at least one round");
  } else {
    if (c.users != 3 && c.users != 5 && c.users != 10)
      fail(ErrorCode::ConfigInvalid, "dynamic mode needs users in {3,5,10}");
    if (c.rooms < 1 || c.rooms > 10)
      fail(ErrorCode::ConfigInvalid, "dynamic mode needs rooms in [1,10]");
    if (c.grouping_period_s != 10.0 && c.grouping_period_s != 20.0 &&
        c.grouping_period_s != 30.0)
      fail(ErrorCode::ConfigInvalid, "grouping period must be 10, 20 or 30 s");
  }
}

// --- layout and mobility ---

struct Layout {
  std::vector<std::pair<double, double>> centers;
  std::vector<std::vector<double>> dist;

  size_t rooms() const { return centers.size(); }
};

inline Layout build_layout(size_t n_rooms) {
  if (n_rooms < 1 || n_rooms > 10)
    fail(ErrorCode::ConfigInvalid, "rooms must be in [1,10]");
  Layout l;
  l.centers = fingerprint::grid_layout(n_rooms);
  l.dist.assign(n_rooms, std::vector<double>(n_rooms, 0.0));
  for (size_t i = 0; i < n_rooms; ++i)
    for (size_t j = 0; j < n_rooms; ++j)
      l.dist[i][j] = std::hypot(l.centers[i].first - l.centers[j].first,
                                l.centers[i].second - l.centers[j].second);
  return l;
}

struct Visit {
  size_t room = 0;
  double dwell_s = 0.0;
};

struct MobilityPath {
  std::vector<Visit> visits;
  std::vector<double> speeds_mps;  // one per transition
  std::vector<double> transit_s;   // one per transition

  double total_s() const {
    double t = 0.0;
    for (const auto& v : visits) t += v.dwell_s;
    for (double s : transit_s) t += s;
    return t;
  }

  // Room at time t, or nullopt while in the corridor.
  std::optional<size_t> room_at(double t) const {
    double cursor = 0.0;
    for (size_t i = 0; i < visits.size(); ++i) {
      if (t < cursor + visits[i].dwell_s) return visits[i].room;
      cursor += visits[i].dwell_s;
      if (i < transit_s.size()) {
        if (t < cursor + transit_s[i]) return std::nullopt;
        cursor += transit_s[i];
      }
    }
    return visits.empty() ? std::nullopt
                          : std::optional<size_t>(visits.back().room);
  }

  // Room occupied during all of [t0, t1], or nullopt if the user
  // moved (or was in transit) at any point of the interval.
  std::optional<size_t> stable_room(double t0, double t1) const {
    double cursor = 0.0;
    std::optional<size_t> room;
    for (size_t i = 0; i < visits.size(); ++i) {
      double dwell_end = cursor + visits[i].dwell_s;
      if (t0 >= cursor && t1 <= dwell_end) return visits[i].room;
      if (t0 < dwell_end && t1 > cursor) room = std::nullopt;
      cursor = dwell_end;
      if (i < transit_s.size()) {
        double transit_end = cursor + transit_s[i];
        if (t0 < transit_end && t1 > cursor) return std::nullopt;
        cursor = transit_end;
      }
    }
    // Past the schedule end the user rests in the last room.
    if (!visits.empty() && t0 >= cursor - visits.back().dwell_s)
      return visits.back().room;
    return std::nullopt;
  }

  // Position at time t; linear interpolation along transitions.
  std::pair<double, double> position_at(double t, const Layout& l) const {
    double cursor = 0.0;
    for (size_t i = 0; i < visits.size(); ++i) {
      if (t < cursor + visits[i].dwell_s) return l.centers[visits[i].room];
      cursor += visits[i].dwell_s;
      if (i < transit_s.size()) {
        if (t < cursor + transit_s[i]) {
          double frac = (t - cursor) / transit_s[i];
          auto a = l.centers[visits[i].room];
          auto b = l.centers[visits[i + 1].room];
          return {a.first + frac * (b.first - a.first),
                  a.second + frac * (b.second - a.second)};
        }
        cursor += transit_s[i];
      }
    }
    return visits.empty() ? std::pair{0.0, 0.0}
                          : l.centers[visits.back().room];
  }
};

// Random stay/transit schedule: visit count uniform in [3,8], rooms
// drawn without immediate repetition, walking speed uniform in
// [1.25, 1.53] m/s, dwell times a multinomial split of the remaining
// 1-second quanta.
inline MobilityPath random_path(double iteration_s, const Layout& layout,
                                Rng& rng) {
  if (iteration_s <= 0.0)
    fail(ErrorCode::ConfigInvalid, "iteration_s must be positive");
  MobilityPath path;
  if (layout.rooms() == 1) {
    path.visits.push_back({0, iteration_s});
    return path;
  }
  std::uniform_int_distribution<size_t> count(3, 8);
  std::uniform_int_distribution<size_t> room(0, layout.rooms() - 1);
  std::uniform_real_distribution<double> speed(1.25, 1.53);
  size_t visits = count(rng);
  std::vector<size_t> seq;
  for (size_t i = 0; i < visits; ++i) {
    size_t r = room(rng);
    while (!seq.empty() && r == seq.back()) r = room(rng);
    seq.push_back(r);
  }
  double transit_total = 0.0;
  for (size_t i = 0; i + 1 < seq.size(); ++i) {
    double v = speed(rng);
    path.speeds_mps.push_back(v);
    path.transit_s.push_back(layout.dist[seq[i]][seq[i + 1]] / v);
    transit_total += path.transit_s.back();
  }
  long quanta = std::lround(iteration_s - transit_total);
  if (quanta < static_cast<long>(visits)) quanta = static_cast<long>(visits);
  // One quantum per visit keeps dwell_s > 0; the rest is multinomial.
  std::vector<long> dwell(visits, 1);
  std::uniform_int_distribution<size_t> slot(0, visits - 1);
  for (long q = static_cast<long>(visits); q < quanta; ++q) ++dwell[slot(rng)];
  for (size_t i = 0; i < visits; ++i)
    path.visits.push_back({seq[i], static_cast<double>(dwell[i])});
  return path;
}

// --- evaluation ---

struct EvalReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double overall = 0.0;  // mean of the four
};

namespace detail {

inline double safe_ratio(double num, double den) {
  return den == 0.0 ? 1.0 : num / den;  // vacuous case counts as perfect
}

struct PairCounts {
  double tp = 0, fp = 0, tn = 0, fn = 0;

  void add(bool predicted_same, bool truly_same) {
    if (predicted_same && truly_same) ++tp;
    else if (predicted_same && !truly_same) ++fp;
    else if (!predicted_same && truly_same) ++fn;
    else ++tn;
  }

  EvalReport report() const {
    EvalReport r;
    r.accuracy = safe_ratio(tp + tn, tp + tn + fp + fn);
    r.precision = safe_ratio(tp, tp + fp);
    r.recall = safe_ratio(tp, tp + fn);
    r.f1 = r.precision + r.recall == 0.0
               ? 0.0
               : 2.0 * r.precision * r.recall / (r.precision + r.recall);
    r.overall = (r.accuracy + r.precision + r.recall + r.f1) / 4.0;
    return r;
  }
};

template <typename K, typename V>
inline void require_same_universe(const std::map<K, V>& a,
                                  const std::map<K, V>& b) {
  bool same = a.size() == b.size();
  if (same)
    for (const auto& [k, v] : a) same &= b.count(k) > 0;
  if (!same)
    fail(ErrorCode::UniverseMismatch,
         "predicted and truth cover different clients");
}

}  // namespace detail

// Pairwise formulation for device-to-device grouping: every unordered
// client pair is a binary same-group instance.
inline EvalReport evaluate_pairwise(const std::map<std::string, int>& predicted,
                                    const std::map<std::string, int>& truth) {
  detail::require_same_universe(predicted, truth);
  detail::PairCounts counts;
  for (auto i = truth.begin(); i != truth.end(); ++i)
    for (auto j = std::next(i); j != truth.end(); ++j)
      counts.add(predicted.at(i->first) == predicted.at(j->first),
                 i->second == j->second);
  return counts.report();
}

// Multiclass formulation for device-to-area grouping: each instance is
// one (client, evaluation time) room label; corridor is its own class.
// Precision/recall/F1 are macro-averaged over the label union.
inline EvalReport evaluate_labels(
    const std::map<std::string, std::string>& predicted,
    const std::map<std::string, std::string>& truth) {
  detail::require_same_universe(predicted, truth);
  std::set<std::string> classes;
  double correct = 0.0;
  for (const auto& [k, t] : truth) {
    classes.insert(t);
    classes.insert(predicted.at(k));
    if (predicted.at(k) == t) ++correct;
  }
  EvalReport r;
  r.accuracy = detail::safe_ratio(correct, static_cast<double>(truth.size()));
  double psum = 0.0, rsum = 0.0, fsum = 0.0;
  for (const auto& c : classes) {
    double tp = 0, fp = 0, fn = 0;
    for (const auto& [k, t] : truth) {
      const auto& p = predicted.at(k);
      if (p == c && t == c) ++tp;
      else if (p == c) ++fp;
      else if (t == c) ++fn;
    }
    double prec = detail::safe_ratio(tp, tp + fp);
    double rec = detail::safe_ratio(tp, tp + fn);
    psum += prec;
    rsum += rec;
    fsum += prec + rec == 0.0 ? 0.0 : 2.0 * prec * rec / (prec + rec);
  }
  double k = static_cast<double>(classes.size());
  r.precision = k == 0.0 ? 1.0 : psum / k;
  r.recall = k == 0.0 ? 1.0 : rsum / k;
  r.f1 = k == 0.0 ? 1.0 : fsum / k;
  r.overall = (r.accuracy + r.precision + r.recall + r.f1) / 4.0;
  return r;
}

// --- report rows ---

struct ReportRow {
  std::string technique;
  std::string feature_type;
  EvalReport report;
  double runtime_s = 0.0;        // emulated receive + compute time
  double receive_fraction = 0.0; // share of runtime spent receiving data
};

inline void write_report_csv(const std::vector<ReportRow>& rows,
                             std::ostream& os) {
  os << "technique,feature_type,overall,runtime_s,accuracy,precision,recall,"
        "f1\n";
  for (const auto& r : rows)
    os << r.technique << "," << r.feature_type << "," << r.report.overall
       << "," << r.runtime_s << "," << r.report.accuracy << ","
       << r.report.precision << "," << r.report.recall << "," << r.report.f1
       << "\n";
}

namespace detail {

struct SimilarityTechnique {
  std::string name;
  SimilarityConfig config;
};

inline const std::vector<SimilarityTechnique>& similarity_techniques() {
  static const std::vector<SimilarityTechnique> t = {
      {"pearson", {Metric::kPearson, Equalizer::kDtw, 0.8}},
      {"spearman", {Metric::kSpearman, Equalizer::kDtw, 0.9}},
      {"distance_correlation",
       {Metric::kDistanceCorrelation, Equalizer::kDtw, 0.86}},
      {"dtw", {Metric::kDtwDistance, Equalizer::kDtw, 0.7}},
  };
  return t;
}

inline bool wants(const ScenarioConfig& c, const std::string& name) {
  if (c.techniques.empty()) return true;
  for (const auto& t : c.techniques)
    if (t == name) return true;
  return false;
}

// The server only trusts a light payload whose periodicity it can
// verify: detection must succeed and the detected period must repeat
// at least kMinRepetitions times inside the window. Detection below
// roughly three repetitions is unreliable, so shorter recordings are
// treated as unverifiable.
inline constexpr double kMinRepetitions = 3.0;

inline bool periodicity_ok(const RawLightSignal& s) {
  try {
    auto seg = cycledetect::detect_cycles(s.voltage_mv);
    return static_cast<double>(seg.mean_distance) * kMinRepetitions <=
           static_cast<double>(s.size());
  } catch (const Error&) {
    return false;
  }
}

// Quadratic metrics stay tractable when payloads are decimated before
// they reach the engine; the sampling interval scales accordingly so
// time alignment still works.
inline RawLightSignal decimated(const RawLightSignal& s, size_t max_samples) {
  if (s.size() <= max_samples || max_samples == 0) return s;
  size_t k = (s.size() + max_samples - 1) / max_samples;
  RawLightSignal out;
  out.start_us = s.start_us;
  out.sampling_interval_us =
      s.sampling_interval_us * static_cast<std::int32_t>(k);
  for (size_t i = 0; i < s.size(); i += k)
    out.voltage_mv.push_back(s.voltage_mv[i]);
  return out;
}

// Emulated round time: the server receives every client's payload,
// then scores `comparisons` signal pairs at a fixed per-sample rate.
inline double emulated_compute_s(Metric metric, double comparisons,
                                 double samples) {
  double ops = metric == Metric::kPearson || metric == Metric::kSpearman
                   ? comparisons * samples
                   : comparisons * samples * samples;
  return ops / 2.0e7;
}

}  // namespace detail

// --- static simulation: one room, device-to-device ---

inline std::vector<ReportRow> run_static(const ScenarioConfig& config) {
  validate_config(config);
  if (config.mode != SimMode::kStatic)
    fail(ErrorCode::ConfigInvalid, "run_static needs a static config");

  struct RoundData {
    std::map<std::string, int> truth;  // client -> subset
    std::map<std::string, RawLightSignal> signals;
    std::map<std::string, bool> valid;  // periodicity gate result
    double receive_s = 0.0;
    double mean_samples = 0.0;
  };
  std::vector<RoundData> rounds;

  Rng rng(config.seed);
  std::uniform_real_distribution<double> latency(config.latency_range_ms.first,
                                                 config.latency_range_ms.second);
  for (size_t round = 0; round < config.rounds; ++round) {
    RoundData rd;
    // Ground truth: 1-3 co-location subsets, sizes multinomial.
    std::uniform_int_distribution<size_t> nsub(
        1, std::min<size_t>(3, config.users));
    size_t subsets = nsub(rng);
    std::uniform_int_distribution<size_t> pick(0, subsets - 1);
    for (size_t u = 0; u < config.users; ++u) {
      size_t s = u < subsets ? u : pick(rng);  // every subset non-empty
      rd.truth["u" + std::to_string(u)] = static_cast<int>(s);
    }
    // One random pattern per subset; length drawn from the config set.
    std::uniform_int_distribution<size_t> li(0,
                                             config.pattern_lengths.size() - 1);
    std::vector<LightPattern> patterns;
    for (size_t s = 0; s < subsets; ++s)
      patterns.push_back(
          lightsig::generate_pattern(config.pattern_lengths[li(rng)], rng));
    // Clients sense with a random start offset inside one pattern
    // duration and upload after a random latency.
    for (const auto& [client, subset] : rd.truth) {
      const auto& p = patterns[subset];
      std::uniform_real_distribution<double> offset(0.0, p.duration_ms());
      auto sig = lightsig::synthesize_signal(
          p, config.sensing_window_ms, offset(rng), lightsig::kDefaultVOnMv,
          lightsig::kDefaultVOffMv, config.noise_std_mv, rng,
          config.sampling_interval_us);
      rd.valid[client] = detail::periodicity_ok(sig);
      rd.signals[client] = std::move(sig);
      rd.receive_s += latency(rng) / 1000.0;
      rd.mean_samples += static_cast<double>(rd.signals[client].size());
    }
    rd.mean_samples /= static_cast<double>(config.users);
    rounds.push_back(std::move(rd));
  }

  std::vector<ReportRow> out;

  // Similarity techniques drive the grouping engine directly.
  for (const auto& tech : detail::similarity_techniques()) {
    if (!detail::wants(config, tech.name)) continue;
    Rng trng(config.seed * 1000003u + 17u);
    detail::PairCounts counts;
    double receive_s = 0.0, compute_s = 0.0;
    for (const auto& rd : rounds) {
      GroupEngine engine(
          {GroupMode::kDeviceToDevice, tech.config, config.pattern_lengths[0]});
      for (const auto& [client, subset] : rd.truth)
        engine.on_client_connect(client, "router", trng);
      for (const auto& [client, subset] : rd.truth)
        if (rd.valid.at(client))
          engine.set_client_payload(client,
                                    detail::decimated(rd.signals.at(client),
                                                      512));
      engine.periodic_tick(trng);
      std::map<std::string, int> predicted;
      int singleton = -1;
      for (const auto& [client, subset] : rd.truth) {
        auto gid = engine.group_of(client);
        predicted[client] = gid ? *gid : singleton--;
      }
      for (auto i = rd.truth.begin(); i != rd.truth.end(); ++i)
        for (auto j = std::next(i); j != rd.truth.end(); ++j)
          counts.add(predicted.at(i->first) == predicted.at(j->first),
                     i->second == j->second);
      receive_s += rd.receive_s;
      compute_s += detail::emulated_compute_s(
          tech.config.metric, static_cast<double>(config.users),
          rd.mean_samples);
    }
    ReportRow row;
    row.technique = tech.name;
    row.feature_type = "light_signal";
    row.report = counts.report();
    row.runtime_s = receive_s + compute_s;
    row.receive_fraction = receive_s / row.runtime_s;
    out.push_back(row);
  }

  // ML techniques classify pairwise feature differences; evaluation is
  // leave-one-round-out so the tested round never trains its model.
  const std::vector<std::pair<std::string, ModelKind>> ml = {
      {"random_forest", ModelKind::kRandomForest},
      {"gradient_boosting", ModelKind::kGradientBoosting},
  };
  for (const auto& [name, kind] : ml) {
    if (!detail::wants(config, name)) continue;
    // Pair instances per round: |feature(a) - feature(b)|.
    std::vector<std::vector<std::pair<std::vector<double>, int>>> instances;
    for (const auto& rd : rounds) {
      std::map<std::string, std::vector<double>> feats;
      for (const auto& [client, sig] : rd.signals)
        feats[client] = tsfeatures::statistical_features(sig.voltage_mv).values;
      std::vector<std::pair<std::vector<double>, int>> inst;
      for (auto i = rd.truth.begin(); i != rd.truth.end(); ++i)
        for (auto j = std::next(i); j != rd.truth.end(); ++j) {
          std::vector<double> x;
          const auto& fa = feats.at(i->first);
          const auto& fb = feats.at(j->first);
          for (size_t k = 0; k < fa.size(); ++k)
            x.push_back(std::abs(fa[k] - fb[k]));
          inst.emplace_back(std::move(x), i->second == j->second ? 1 : 0);
        }
      instances.push_back(std::move(inst));
    }
    Rng trng(config.seed * 1000003u + 29u);
    detail::PairCounts counts;
    double receive_s = 0.0, compute_s = 0.0;
    for (size_t r = 0; r < rounds.size(); ++r) {
      Dataset train;
      for (size_t o = 0; o < rounds.size(); ++o) {
        if (o == r) continue;
        for (const auto& [x, y] : instances[o]) {
          train.X.push_back(x);
          train.y.push_back(y);
        }
      }
      bool same_default = false;
      std::optional<mlkit::Model> model;
      try {
        model = mlkit::train(kind, train, {}, trng);
      } catch (const Error&) {
        // Degenerate training labels: predict the majority class.
        double pos = 0.0;
        for (int y : train.y) pos += y;
        same_default = train.y.size() > 0 && pos * 2 > train.y.size();
      }
      for (const auto& [x, y] : instances[r]) {
        bool same = model ? model->predict(x) == 1 : same_default;
        counts.add(same, y == 1);
      }
      receive_s += rounds[r].receive_s;
      compute_s += static_cast<double>(instances[r].size()) * 1e-4;
    }
    ReportRow row;
    row.technique = name;
    row.feature_type = "stat_features";
    row.report = counts.report();
    row.runtime_s = receive_s + compute_s;
    row.receive_fraction = receive_s / row.runtime_s;
    out.push_back(row);
  }
  return out;
}

// --- dynamic simulation: multi-room mobility, device-to-area ---

inline std::vector<ReportRow> run_dynamic(const ScenarioConfig& config) {
  validate_config(config);
  if (config.mode != SimMode::kDynamic)
    fail(ErrorCode::ConfigInvalid, "run_dynamic needs a dynamic config");

  auto layout = build_layout(config.rooms);
  Rng rng(config.seed);

  // Fixed per-room pattern and fingerprint environment.
  std::vector<LightPattern> room_patterns;
  std::uniform_int_distribution<size_t> li(0, config.pattern_lengths.size() - 1);
  for (size_t r = 0; r < config.rooms; ++r)
    room_patterns.push_back(
        lightsig::generate_pattern(config.pattern_lengths[li(rng)], rng));
  auto env =
      fingerprint::synth_environment(config.rooms, 2, layout.centers, rng);
  std::vector<RoomProfile> profiles;
  for (size_t r = 0; r < config.rooms; ++r)
    profiles.push_back(fingerprint::build_room_profile(
        "room_" + std::to_string(r),
        env.scan_stream(layout.centers[r].first, layout.centers[r].second, 20,
                        rng)));

  // Mobility and the shared evaluation schedule. Each payload is the
  // light sensed over the elapsed period; the duty cycle budget makes
  // the snippet grow with the period, while longer periods raise the
  // chance the user moved mid-period and spoiled the recording.
  std::vector<MobilityPath> paths;
  for (size_t u = 0; u < config.users; ++u)
    paths.push_back(random_path(config.iteration_s, layout, rng));
  // Usable sensing per period: a fixed warm-up (upload + sensor
  // settling) eats into each period before the duty budget applies.
  double window_ms =
      config.sensing_ms_per_period_s *
      std::max(0.5, config.grouping_period_s - config.sensing_warmup_s);
  // Adjacency for cross-room light bleed near open doors.
  std::vector<std::vector<size_t>> neighbors(config.rooms);
  for (size_t a = 0; a < config.rooms; ++a)
    for (size_t b = 0; b < config.rooms; ++b)
      if (a != b && layout.dist[a][b] <= 3.1) neighbors[a].push_back(b);

  struct Instance {
    std::string key;
    std::string truth;
    RawLightSignal signal;  // empty voltage = no usable light data
    bool valid = false;
    std::pair<double, double> position;  // where the snippet was sensed
  };
  std::vector<Instance> all;
  std::uniform_real_distribution<double> back(0.0, config.grouping_period_s);
  std::uniform_real_distribution<double> latency(config.latency_range_ms.first,
                                                 config.latency_range_ms.second);
  double receive_s = 0.0;
  size_t evals = 0;
  for (double t = config.grouping_period_s; t <= config.iteration_s;
       t += config.grouping_period_s) {
    for (size_t u = 0; u < config.users; ++u) {
      Instance inst;
      inst.key = "u" + std::to_string(u) + "@" + std::to_string(evals);
      auto truth_room = paths[u].room_at(t);
      inst.truth =
          truth_room ? "room_" + std::to_string(*truth_room) : "corridor";
      double t_sense = t - back(rng);
      inst.position = paths[u].position_at(t_sense, layout);
      // The payload accumulates over the whole elapsed period. Moving
      // during the period mixes light from several sources, so only a
      // stable occupant produces a usable signal.
      auto sensed_room =
          paths[u].stable_room(t - config.grouping_period_s, t);
      if (sensed_room && !neighbors[*sensed_room].empty()) {
        // Near an open door the neighbor's light can dominate.
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (unit(rng) < config.bleed_per_neighbor *
                            static_cast<double>(neighbors[*sensed_room].size())) {
          std::uniform_int_distribution<size_t> pick(
              0, neighbors[*sensed_room].size() - 1);
          sensed_room = neighbors[*sensed_room][pick(rng)];
        }
      }
      if (sensed_room) {
        const auto& p = room_patterns[*sensed_room];
        std::uniform_real_distribution<double> offset(0.0, p.duration_ms());
        inst.signal = lightsig::synthesize_signal(
            p, window_ms, offset(rng), lightsig::kDefaultVOnMv,
            lightsig::kDefaultVOffMv, config.noise_std_mv, rng,
            config.sampling_interval_us);
        inst.valid = detail::periodicity_ok(inst.signal);
      }
      receive_s += latency(rng) / 1000.0;
      all.push_back(std::move(inst));
      ++evals;
    }
  }

  std::vector<ReportRow> out;
  double samples = window_ms * 1000.0 /
                   static_cast<double>(config.sampling_interval_us);

  for (const auto& tech : detail::similarity_techniques()) {
    if (!detail::wants(config, tech.name)) continue;
    Rng trng(config.seed * 1000003u + 41u);
    GroupEngine engine(
        {GroupMode::kDeviceToArea, tech.config, config.pattern_lengths[0]});
    // One bulb per room; masters hold the fixed room patterns.
    for (size_t r = 0; r < config.rooms; ++r)
      engine.register_bulb("bulb_" + std::to_string(r),
                           "room_" + std::to_string(r));
    engine.assign_masters(trng);
    for (size_t r = 0; r < config.rooms; ++r)
      engine.set_area_pattern("room_" + std::to_string(r), room_patterns[r]);
    std::map<std::string, std::string> predicted, truth;
    for (const auto& inst : all) {
      truth[inst.key] = inst.truth;
      if (!inst.valid) {
        predicted[inst.key] = "corridor";
        continue;
      }
      engine.on_client_connect(inst.key, "router", trng);
      engine.set_client_payload(inst.key, detail::decimated(inst.signal, 512));
      auto dec = engine.evaluate_client(inst.key, trng);
      predicted[inst.key] =
          dec.evaluated && !dec.unbound ? dec.area_id : "corridor";
      engine.on_client_disconnect(inst.key);
    }
    ReportRow row;
    row.technique = tech.name;
    row.feature_type = "light_signal";
    row.report = evaluate_labels(predicted, truth);
    row.runtime_s =
        receive_s + detail::emulated_compute_s(
                        tech.config.metric,
                        static_cast<double>(all.size()) *
                            static_cast<double>(config.rooms),
                        samples);
    row.receive_fraction = receive_s / row.runtime_s;
    out.push_back(row);
  }

  // Fingerprint baseline: nearest room profile at the sensing position.
  if (detail::wants(config, "cbf")) {
    Rng trng(config.seed * 1000003u + 59u);
    std::map<std::string, std::string> predicted, truth;
    for (const auto& inst : all) {
      truth[inst.key] = inst.truth;
      auto scan = env.scan_at(inst.position.first, inst.position.second, 0.0,
                              trng);
      predicted[inst.key] = fingerprint::cbf_localize(scan, profiles);
    }
    ReportRow row;
    row.technique = "cbf";
    row.feature_type = "wifi_fingerprint";
    row.report = evaluate_labels(predicted, truth);
    row.runtime_s = receive_s + static_cast<double>(all.size()) * 1e-4;
    row.receive_fraction = receive_s / row.runtime_s;
    out.push_back(row);
  }
  return out;
}

}  // namespace simulator
}  // namespace lumigroup
