// Release gate: one self-contained check per shipping criterion,
// printing a single pass/fail line each. Library results are compared
// against independent oracles (direct O(n^2) autocorrelation, a
// recursive DTW, hand-computed metric fixtures) rather than against
// the implementations under test.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "lumigroup/cycledetect.hpp"
#include "lumigroup/groupengine.hpp"
#include "lumigroup/lightsig.hpp"
#include "lumigroup/mlkit.hpp"
#include "lumigroup/semlog.hpp"
#include "lumigroup/simmetrics.hpp"
#include "lumigroup/simulator.hpp"

namespace fs = std::filesystem;
using namespace lumigroup;

namespace {

struct Failure {
  std::string detail;
};

void expect(bool ok, const std::string& detail) {
  if (!ok) throw Failure{detail};
}

// --- 1. FFT autocorrelation vs direct O(n^2) oracle ---

std::vector<double> direct_autocorrelation(const std::vector<double>& z) {
  size_t n = z.size();
  std::vector<double> r(n, 0.0);
  for (size_t tau = 0; tau < n; ++tau)
    for (size_t k = 0; k < n; ++k) r[tau] += z[k] * z[(k + tau) % n];
  return r;
}

void criterion_autocorrelation() {
  Rng rng(101);
  std::uniform_int_distribution<size_t> len(2, 4096);
  std::uniform_real_distribution<double> value(-100.0, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> z(len(rng));
    for (auto& v : z) v = value(rng);
    auto fast = cycledetect::autocorrelation(z);
    auto slow = direct_autocorrelation(z);
    expect(fast.size() == slow.size(), "lag count mismatch");
    for (size_t t = 0; t < slow.size(); ++t) {
      double scale = std::max(1.0, std::abs(slow[t]));
      expect(std::abs(fast[t] - slow[t]) <= 1e-9 * scale,
             "relative error above 1e-9 at lag " + std::to_string(t));
    }
  }
}

// --- 2. DTW vs exhaustive recursion ---

double dtw_recursive(const std::vector<double>& a, const std::vector<double>& b,
                     size_t i, size_t j) {
  double c = std::abs(a[i] - b[j]);
  if (i == 0 && j == 0) return c;
  if (i == 0) return c + dtw_recursive(a, b, 0, j - 1);
  if (j == 0) return c + dtw_recursive(a, b, i - 1, 0);
  return c + std::min({dtw_recursive(a, b, i - 1, j - 1),
                       dtw_recursive(a, b, i - 1, j),
                       dtw_recursive(a, b, i, j - 1)});
}

void criterion_dtw_oracle() {
  Rng rng(202);
  std::uniform_int_distribution<size_t> len(1, 10);
  std::uniform_real_distribution<double> value(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(len(rng)), b(len(rng));
    for (auto& v : a) v = value(rng);
    for (auto& v : b) v = value(rng);
    double got = simmetrics::dtw_align(a, b).cost;
    double want = dtw_recursive(a, b, a.size() - 1, b.size() - 1);
    expect(got == want, "DTW cost differs from the recursive oracle");
  }
}

// --- 3. similarity identities and distortion monotonicity ---

void criterion_similarity() {
  const Metric metrics[] = {Metric::kPearson, Metric::kSpearman,
                            Metric::kDistanceCorrelation,
                            Metric::kDtwDistance};
  Rng rng(303);
  std::uniform_real_distribution<double> value(0.0, 3300.0);
  for (Metric m : metrics) {
    std::vector<double> a(200);
    for (auto& v : a) v = value(rng);
    SimilarityConfig cfg{m, Equalizer::kFill, 0.0};
    double s = simmetrics::similarity(a, a, cfg).score;
    expect(std::abs(s - 1.0) <= 1e-12, "score(a,a) != 1 for a metric");
  }
  // Median over >= 50 seeds must be non-increasing in the distortion
  // rate, up to a 0.02 tolerance.
  const int kSeeds = 50;
  for (Metric m : metrics) {
    std::vector<double> medians;
    for (int r = 0; r <= 5; ++r) {
      double rate = 0.2 * r;
      std::vector<double> scores;
      for (int s = 0; s < kSeeds; ++s) {
        Rng trial(1000u * static_cast<unsigned>(s) + 17u);
        auto p = lightsig::generate_pattern(4, trial);
        auto sig = lightsig::synthesize_signal(
            p, 4.0 * p.duration_ms(), 0.0, lightsig::kDefaultVOnMv,
            lightsig::kDefaultVOffMv, lightsig::kDefaultNoiseStdMv, trial,
            100);
        auto dist = lightsig::distort_signal(sig, rate, trial);
        SimilarityConfig cfg{m, Equalizer::kFill, 0.0};
        scores.push_back(
            simmetrics::similarity(sig.voltage_mv, dist.voltage_mv, cfg)
                .score);
      }
      medians.push_back(stats::median(scores));
    }
    for (size_t i = 0; i + 1 < medians.size(); ++i)
      expect(medians[i + 1] <= medians[i] + 0.02,
             "median similarity increased with distortion");
  }
}

// --- 4. minimal sampling window ratio ---

void criterion_sampling_window() {
  Rng rng(404);
  double ratio_sum = 0.0;
  int ratio_count = 0;
  for (int len : {2, 4, 6, 8, 10}) {
    double success = 0.0;
    const int trials = 100;
    for (int i = 0; i < trials; ++i) {
      auto p = lightsig::generate_pattern(len, rng);
      double d = p.duration_ms();
      ratio_sum += cycledetect::minimal_sampling_window(p, rng) / d;
      ++ratio_count;
      std::uniform_real_distribution<double> offset(0.0, d);
      if (cycledetect::window_recovers_pattern(p, 4.0 * d, offset(rng), rng))
        success += 1.0;
    }
    expect(success / trials >= 0.9,
           "success rate below 90% at a 4x window, length " +
               std::to_string(len));
  }
  double mean_ratio = ratio_sum / ratio_count;
  expect(mean_ratio >= 2.5 && mean_ratio <= 4.0,
         "mean minimal-window ratio " + std::to_string(mean_ratio) +
             " outside [2.5, 4.0]");
}

// --- 5. noiseless pattern recovery ---

void criterion_pattern_recovery() {
  Rng rng(505);
  for (int len : {2, 4, 6, 8, 10}) {
    for (int trial = 0; trial < 20; ++trial) {
      auto p = lightsig::generate_pattern(len, rng);
      std::uniform_real_distribution<double> offset(0.0, p.duration_ms());
      auto sig = lightsig::synthesize_signal(
          p, 4.0 * p.duration_ms(), offset(rng), lightsig::kDefaultVOnMv,
          lightsig::kDefaultVOffMv, 0.0, rng);
      auto runs = cycledetect::extract_period_list(sig);
      auto folded = cycledetect::fold_to_pattern(runs);
      expect(folded.length() == static_cast<size_t>(len),
             "recovered length mismatch at length " + std::to_string(len));
      // Durations within one sample of the default 20 us interval.
      double tol_ms = sig.sampling_interval_us / 1000.0 + 1e-9;
      expect(lightsig::patterns_equivalent(p, folded, tol_ms),
             "recovered durations off by more than one sample");
    }
  }
}

// --- 6. static simulation ---

double static_overall(size_t users, int length, unsigned seed) {
  simulator::ScenarioConfig c;
  c.mode = simulator::SimMode::kStatic;
  c.users = users;
  c.pattern_lengths = {length};
  c.seed = seed;
  c.techniques = {"pearson"};
  auto rows = simulator::run_static(c);
  expect(rows.size() == 1, "expected one pearson report row");
  return rows[0].report.overall;
}

void criterion_static_sim() {
  for (size_t users = 2; users <= 10; ++users) {
    double overall = static_overall(users, 4, 1);
    expect(overall >= 0.85, "pearson overall " + std::to_string(overall) +
                                " below 0.85 with " + std::to_string(users) +
                                " users");
  }
  double len4 = static_overall(6, 4, 1);
  double len10 = static_overall(6, 10, 1);
  expect(len4 >= len10, "length-4 overall below length-10 overall");
}

// --- 7. dynamic simulation ---

double dynamic_overall(size_t rooms, double period_s, unsigned seed) {
  simulator::ScenarioConfig c;
  c.mode = simulator::SimMode::kDynamic;
  c.users = 5;
  c.rooms = rooms;
  c.grouping_period_s = period_s;
  c.seed = seed;
  c.techniques = {"pearson"};
  auto rows = simulator::run_dynamic(c);
  expect(rows.size() == 1, "expected one pearson report row");
  return rows[0].report.overall;
}

void criterion_dynamic_sim() {
  // Ordinal reproduction only; averaged over three seeds.
  const unsigned seeds[] = {1, 2, 3};
  double p10 = 0.0, p20 = 0.0, p30 = 0.0;
  for (unsigned s : seeds) {
    p10 += dynamic_overall(5, 10.0, s);
    p20 += dynamic_overall(5, 20.0, s);
    p30 += dynamic_overall(5, 30.0, s);
  }
  expect(p20 >= p10, "20 s grouping period not better than 10 s");
  expect(p20 >= p30, "20 s grouping period not better than 30 s");
  double one_room = 0.0, ten_rooms = 0.0;
  for (unsigned s : seeds) {
    one_room += dynamic_overall(1, 20.0, s);
    ten_rooms += dynamic_overall(10, 20.0, s);
  }
  expect((one_room - ten_rooms) / 3.0 >= 0.1,
         "overall drop from 1 to 10 rooms below 0.1");
}

// --- 8. protocol round trip ---

void criterion_protocol() {
  Rng rng(808);
  std::uniform_int_distribution<size_t> len(0, 4096);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<int> type(1, 4);
  for (int i = 0; i < 10000; ++i) {
    Message m;
    m.msg_type = static_cast<MsgType>(type(rng));
    m.payload.resize(len(rng));
    for (auto& c : m.payload) c = static_cast<char>(byte(rng));
    expect(protocol::parse(protocol::frame(m)) == m, "round trip mismatch");
  }
  auto good = protocol::frame({MsgType::kLightPattern, "payload"});
  auto expect_error = [&](std::string bytes, ErrorCode code,
                          const std::string& what) {
    try {
      protocol::parse(bytes);
    } catch (const Error& e) {
      expect(e.code() == code, what + ": wrong error code");
      return;
    }
    throw Failure{what + ": accepted"};
  };
  auto bad_type = good;
  bad_type[0] = 99;
  expect_error(bad_type, ErrorCode::BadType, "bad type byte");
  expect_error(good.substr(0, 3), ErrorCode::Truncated, "short header");
  expect_error(good.substr(0, good.size() - 2), ErrorCode::Truncated,
               "short payload");
  expect_error(good + "x", ErrorCode::LengthMismatch, "trailing bytes");
}

// --- 9. grouping state machine ---

void criterion_state_machine() {
  Rng rng(909);
  EngineConfig cfg;
  cfg.mode = GroupMode::kDeviceToDevice;
  GroupEngine engine(cfg);
  const std::vector<std::string> areas = {"hall", "lab", "office"};
  for (size_t a = 0; a < areas.size(); ++a) {
    engine.register_bulb("bulb" + std::to_string(2 * a), areas[a]);
    engine.register_bulb("bulb" + std::to_string(2 * a + 1), areas[a]);
  }
  engine.register_router("router0");
  engine.assign_masters(rng);

  std::vector<std::string> clients;
  for (int i = 0; i < 12; ++i) clients.push_back("c" + std::to_string(i));
  std::set<std::string> connected;
  std::uniform_int_distribution<size_t> pick_client(0, clients.size() - 1);
  std::uniform_int_distribution<size_t> pick_area(0, areas.size() - 1);
  std::uniform_int_distribution<int> pick_event(0, 9);

  auto sense = [&](const std::string& client) {
    // The client senses its area's current pattern with mild noise.
    const auto& bulbs = engine.bulbs();
    auto it = bulbs.find("bulb" + std::to_string(2 * pick_area(rng)));
    auto sig = lightsig::synthesize_signal(
        it->second.current_pattern, 90.0, 0.0, lightsig::kDefaultVOnMv,
        lightsig::kDefaultVOffMv, 15.0, rng, 100);
    engine.set_client_payload(client, sig);
  };

  for (int event = 0; event < 1000; ++event) {
    int kind = pick_event(rng);
    const std::string& client = clients[pick_client(rng)];
    if (kind <= 3) {
      engine.on_client_connect(client, "router0", rng);
      connected.insert(client);
      sense(client);
    } else if (kind <= 5) {
      if (connected.count(client)) {
        // Disconnecting one client must leave every other client's
        // membership untouched.
        std::map<std::string, std::optional<int>> before;
        for (const auto& other : connected)
          if (other != client) before[other] = engine.group_of(other);
        engine.on_client_disconnect(client);
        connected.erase(client);
        for (const auto& [other, gid] : before)
          expect(engine.group_of(other) == gid,
                 "disconnect changed an unrelated membership");
      }
    } else if (kind <= 7) {
      if (connected.count(client)) sense(client);
      engine.periodic_tick(rng);
    } else if (kind == 8) {
      engine.refresh_patterns(rng);
    } else {
      engine.periodic_tick(rng);
    }
    // Throws on any disjointness or master-count violation.
    engine.check_invariants();
  }
}

// --- 10. semantic association log ---

void criterion_semlog() {
  Rng rng(1);
  semlog::GeneratorConfig cfg;
  cfg.days = 120;
  auto tb = semlog::testbed("dense");
  auto log = semlog::generate_log(tb, rng, cfg);

  // 100% calendar-rule compliance of the generated encounters.
  for (const auto& e : log) {
    semlog::GroupClass c = semlog::class_of_device(*e.device_ids.begin());
    for (const auto& d : e.device_ids)
      expect(semlog::class_of_device(d) == c, "mixed-class encounter");
    semlog::DayKind dk = semlog::day_kind(e.day(), cfg.holidays);
    bool allowed = false;
    for (const auto& rule : semlog::class_rules(c))
      allowed |= semlog::rule_applies(rule, dk) &&
                 semlog::slot_contains(rule.slot, e.hour());
    expect(allowed, "encounter outside its class calendar rules");
  }

  // One (classifier, feature) pair sustaining >= 0.8 with an early
  // cold start and strong final F1.
  auto res = semlog::classify_and_coldstart(
      log, ModelKind::kNaiveBayes, "contact frequency per week - sum", 7);
  expect(!res.never_cold && res.accepted, "no sustained >= 0.8 stretch");
  expect(res.cold_start_day <= 40, "cold start later than 40 days");
  expect(res.final_report.f1 >= 0.85, "final F1 below 0.85");

  // Mixture groups must cluster worse than single-class groups.
  std::map<std::string, int> single_groups;
  for (semlog::GroupClass c : semlog::all_classes())
    for (int i = 0; i < tb.devices_per_group; ++i)
      single_groups[semlog::device_name(c, i)] = static_cast<int>(c);
  std::vector<mlkit::ClusterMethod> methods = {
      mlkit::ClusterMethod::kKmeansElbow,
      mlkit::ClusterMethod::kKmeansSilhouette,
      mlkit::ClusterMethod::kHierarchicalSilhouette,
      mlkit::ClusterMethod::kGmmBic,
      mlkit::ClusterMethod::kGmmAic,
      mlkit::ClusterMethod::kXmeans};
  double single = semlog::cluster_over_time(log, single_groups, 84, methods, 5);
  Rng rng2(2);
  auto mix = semlog::generate_mixture_log(tb, rng2, cfg);
  double mixture =
      semlog::cluster_over_time(mix.log, mix.group_of, 84, methods, 5);
  expect(mixture < single, "mixture clustering not below single-class");
}

// --- 11. ML internals ---

void criterion_ml_internals() {
  Rng rng(1111);
  // EM log-likelihood is monotone non-decreasing.
  std::normal_distribution<double> noise(0.0, 1.0);
  mlkit::Points cloud;
  for (int i = 0; i < 120; ++i)
    cloud.push_back({noise(rng) + (i % 2 ? 4.0 : 0.0), noise(rng)});
  auto g = mlkit::gmm_fit(cloud, 2, rng);
  for (size_t i = 0; i + 1 < g.loglik_history.size(); ++i)
    expect(g.loglik_history[i + 1] >= g.loglik_history[i] - 1e-9,
           "EM log-likelihood decreased");

  // Three tight blobs: every estimator must report k = 3.
  std::normal_distribution<double> tight(0.0, 0.4);
  const double centers[3][2] = {{0.0, 0.0}, {10.0, 0.0}, {0.0, 10.0}};
  mlkit::Points blobs;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 60; ++i)
      blobs.push_back({centers[c][0] + tight(rng), centers[c][1] + tight(rng)});
  const mlkit::ClusterMethod methods[] = {
      mlkit::ClusterMethod::kKmeansElbow,
      mlkit::ClusterMethod::kKmeansSilhouette,
      mlkit::ClusterMethod::kHierarchicalSilhouette,
      mlkit::ClusterMethod::kGmmBic,
      mlkit::ClusterMethod::kGmmAic,
      mlkit::ClusterMethod::kXmeans};
  for (auto m : methods) {
    auto est = mlkit::cluster_count_estimate(blobs, m, rng);
    expect(est.k == 3 && !est.low_confidence,
           "a cluster-count method missed the 3-blob fixture");
  }

  // Metrics against a hand-built confusion matrix. Two classes:
  // class 0 with 4 true (3 predicted right), class 1 with 6 true
  // (5 predicted right); one false positive each way.
  std::vector<int> y_true = {0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
  std::vector<int> y_pred = {0, 0, 0, 1, 1, 1, 1, 1, 1, 0};
  auto rep = mlkit::evaluate(y_true, y_pred, {}, {0, 1});
  expect(rep.accuracy == 0.8, "accuracy off");
  expect(rep.precision == 0.5 * (3.0 / 4.0 + 5.0 / 6.0), "precision off");
  expect(rep.recall == 0.5 * (3.0 / 4.0 + 5.0 / 6.0), "recall off");
  expect(rep.f1 == 0.5 * (2.0 * (3.0 / 4.0) * (3.0 / 4.0) / (3.0 / 4.0 + 3.0 / 4.0) +
                          2.0 * (5.0 / 6.0) * (5.0 / 6.0) / (5.0 / 6.0 + 5.0 / 6.0)),
         "f1 off");
}

// --- 12. CLI determinism ---

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Failure{"missing output file " + p.string()};
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void criterion_cli_determinism() {
  fs::path base = fs::temp_directory_path() /
                  ("lumigroup_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(base);
  const char* studies[] = {"distortion",     "sampling-window",
                           "users",          "pattern-length",
                           "rooms",          "grouping-frequency"};
  for (const char* s : studies) {
    fs::path d1 = base / (std::string(s) + "_1");
    fs::path d2 = base / (std::string(s) + "_2");
    for (const fs::path& d : {d1, d2}) {
      std::string cmd = std::string(LUMIGROUP_CLI) + " study " + s +
                        " --seed 7 -o " + d.string() + " >/dev/null 2>&1";
      int rc = std::system(cmd.c_str());
      expect(WIFEXITED(rc) && WEXITSTATUS(rc) == 0,
             std::string("study ") + s + " failed");
    }
    expect(slurp(d1 / "study.csv") == slurp(d2 / "study.csv"),
           std::string("study ") + s + " data not byte-identical");
  }
  std::error_code ec;
  fs::remove_all(base, ec);
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<void()> run;
  };
  const Criterion criteria[] = {
      {"autocorrelation matches the direct O(n^2) oracle",
       criterion_autocorrelation},
      {"DTW matches the exhaustive recursive oracle", criterion_dtw_oracle},
      {"similarity identities and distortion monotonicity",
       criterion_similarity},
      {"minimal sampling window ratio in [2.5, 4.0]",
       criterion_sampling_window},
      {"noiseless pattern recovery within one sample",
       criterion_pattern_recovery},
      {"static simulation reaches 0.85 overall", criterion_static_sim},
      {"dynamic simulation period and room ordering", criterion_dynamic_sim},
      {"protocol round trip and malformed rejection", criterion_protocol},
      {"state machine invariants over 1000 events", criterion_state_machine},
      {"association log classification and clustering", criterion_semlog},
      {"ML internals: EM, cluster counts, metric fixture",
       criterion_ml_internals},
      {"CLI studies byte-identical across reruns", criterion_cli_determinism},
  };
  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    std::string verdict = "PASS";
    std::string detail;
    try {
      c.run();
    } catch (const Failure& f) {
      verdict = "FAIL";
      detail = f.detail;
      ++failures;
    } catch (const std::exception& e) {
      verdict = "FAIL";
      detail = e.what();
      ++failures;
    }
    std::cout << "criterion " << index << " [" << verdict << "] " << c.name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
