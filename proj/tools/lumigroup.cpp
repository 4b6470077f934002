// Command-line front end: pattern/signal utilities, similarity checks,
// feature extraction, simulation scenarios, study sweeps, association
// log analysis and the protocol self-check. Every run writes its
// reports plus a manifest (config echo, version, seed) into the output
// directory; identical argv and seed reproduce identical data files.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lumigroup/cycledetect.hpp"
#include "lumigroup/fingerprint.hpp"
#include "lumigroup/groupengine.hpp"
#include "lumigroup/lightsig.hpp"
#include "lumigroup/mlkit.hpp"
#include "lumigroup/semlog.hpp"
#include "lumigroup/simmetrics.hpp"
#include "lumigroup/simulator.hpp"
#include "lumigroup/tsfeatures.hpp"

namespace fs = std::filesystem;
using namespace lumigroup;

namespace {

constexpr const char* kVersion = "1.0.0";

struct CommonOpts {
  unsigned seed = 0;
  std::string out_dir = "out";
  std::string config;
  int jobs = 1;
  std::vector<std::pair<std::string, std::string>> echo;

  void note(const std::string& key, const std::string& value) {
    echo.emplace_back(key, value);
  }
  void note(const std::string& key, double value) {
    std::ostringstream os;
    os << value;
    note(key, os.str());
  }
  void note(const std::string& key, long long value) {
    note(key, std::to_string(value));
  }
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--seed", opts.seed, "random seed")
      ->envname("LUMIGROUP_SEED");
  cmd->add_option("-o,--out", opts.out_dir, "output directory");
  cmd->add_option("--jobs", opts.jobs, "parallelism cap")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--config", opts.config,
                  "flat key=value config file; explicit flags win");
}

void write_file(const CommonOpts& opts, const std::string& name,
                const std::string& content) {
  fs::create_directories(opts.out_dir);
  std::ofstream f(fs::path(opts.out_dir) / name, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot write " + name);
  f << content;
}

std::string now_iso8601() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&t));
  return buf;
}

void write_manifest(const CommonOpts& opts, const std::string& command) {
  std::ostringstream os;
  os << "command=" << command << "\n";
  os << "version=" << kVersion << "\n";
  os << "seed=" << opts.seed << "\n";
  for (const auto& [k, v] : opts.echo) os << k << "=" << v << "\n";
  os << "timestamp=" << now_iso8601() << "\n";
  write_file(opts, "manifest.txt", os.str());
}

LightPattern load_pattern(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot read " + path);
  return lightsig::read_pattern_csv(f);
}

RawLightSignal load_signal(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot read " + path);
  return lightsig::read_signal_csv(f);
}

semlog::AssociationLog load_log(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot read " + path);
  return semlog::read_log_csv(f);
}

Metric metric_from_name(const std::string& name) {
  if (name == "pearson") return Metric::kPearson;
  if (name == "spearman") return Metric::kSpearman;
  if (name == "distance_correlation") return Metric::kDistanceCorrelation;
  if (name == "dtw") return Metric::kDtwDistance;
  fail(ErrorCode::ConfigInvalid, "unknown metric: " + name);
}

Equalizer equalizer_from_name(const std::string& name) {
  if (name == "fill") return Equalizer::kFill;
  if (name == "cut") return Equalizer::kCut;
  if (name == "dtw") return Equalizer::kDtw;
  fail(ErrorCode::ConfigInvalid, "unknown equalizer: " + name);
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "random_forest") return ModelKind::kRandomForest;
  if (name == "extra_trees") return ModelKind::kExtraTrees;
  if (name == "gradient_boosting") return ModelKind::kGradientBoosting;
  if (name == "naive_bayes") return ModelKind::kNaiveBayes;
  if (name == "ada_boost") return ModelKind::kAdaBoost;
  if (name == "linear_svm") return ModelKind::kLinearSvm;
  fail(ErrorCode::ConfigInvalid, "unknown classifier: " + name);
}

std::string long_csv(const std::vector<std::tuple<std::string, std::string,
                                                  double>>& rows) {
  std::ostringstream os;
  os << "x,series,value\n";
  for (const auto& [x, series, value] : rows)
    os << x << "," << series << "," << value << "\n";
  return os.str();
}

std::string report_csv(const std::vector<simulator::ReportRow>& rows) {
  std::ostringstream os;
  simulator::write_report_csv(rows, os);
  return os.str();
}

// --- study sweeps (plot-ready long-format CSV) ---

std::string study_distortion(const CommonOpts& opts) {
  const std::pair<const char*, Metric> metrics[] = {
      {"pearson", Metric::kPearson},
      {"spearman", Metric::kSpearman},
      {"distance_correlation", Metric::kDistanceCorrelation},
      {"dtw", Metric::kDtwDistance}};
  std::vector<std::tuple<std::string, std::string, double>> rows;
  for (const auto& [name, metric] : metrics) {
    for (int r = 0; r <= 10; ++r) {
      double rate = 0.1 * r;
      std::vector<double> scores;
      for (unsigned s = 0; s < 50; ++s) {
        Rng rng(opts.seed * 1009u + s);
        auto p = lightsig::generate_pattern(4, rng);
        auto sig = lightsig::synthesize_signal(
            p, 4.0 * p.duration_ms(), 0.0, lightsig::kDefaultVOnMv,
            lightsig::kDefaultVOffMv, lightsig::kDefaultNoiseStdMv, rng, 100);
        auto dist = lightsig::distort_signal(sig, rate, rng);
        SimilarityConfig cfg{metric, Equalizer::kFill, 0.0};
        scores.push_back(
            simmetrics::similarity(sig.voltage_mv, dist.voltage_mv, cfg)
                .score);
      }
      std::ostringstream x;
      x << rate;
      rows.emplace_back(x.str(), name, stats::median(scores));
    }
  }
  return long_csv(rows);
}

std::string study_sampling_window(const CommonOpts& opts) {
  std::vector<std::tuple<std::string, std::string, double>> rows;
  for (int len : {2, 4, 6, 8, 10}) {
    Rng rng(opts.seed * 733u + static_cast<unsigned>(len));
    double ratio_sum = 0.0;
    double success = 0.0;
    const int trials = 100;
    for (int i = 0; i < trials; ++i) {
      auto p = lightsig::generate_pattern(len, rng);
      double d = p.duration_ms();
      ratio_sum += cycledetect::minimal_sampling_window(p, rng) / d;
      std::uniform_real_distribution<double> offset(0.0, d);
      if (cycledetect::window_recovers_pattern(p, 4.0 * d, offset(rng), rng))
        success += 1.0;
    }
    rows.emplace_back(std::to_string(len), "mean_ratio", ratio_sum / trials);
    rows.emplace_back(std::to_string(len), "success_at_4x", success / trials);
  }
  return long_csv(rows);
}

std::string study_users(const CommonOpts& opts,
                        const std::vector<std::string>& techniques) {
  std::vector<std::tuple<std::string, std::string, double>> rows;
  for (size_t users = 2; users <= 10; ++users) {
    simulator::ScenarioConfig c;
    c.mode = simulator::SimMode::kStatic;
    c.users = users;
    c.seed = opts.seed;
    c.techniques = techniques;
    for (const auto& row : simulator::run_static(c))
      rows.emplace_back(std::to_string(users), row.technique,
                        row.report.overall);
  }
  return long_csv(rows);
}

std::string study_pattern_length(const CommonOpts& opts,
                                 const std::vector<std::string>& techniques) {
  std::vector<std::tuple<std::string, std::string, double>> rows;
  for (int len : {2, 4, 6, 8, 10}) {
    simulator::ScenarioConfig c;
    c.mode = simulator::SimMode::kStatic;
    c.users = 6;
    c.pattern_lengths = {len};
    c.seed = opts.seed;
    c.techniques = techniques;
    for (const auto& row : simulator::run_static(c))
      rows.emplace_back(std::to_string(len), row.technique,
                        row.report.overall);
  }
  return long_csv(rows);
}

std::string study_rooms(const CommonOpts& opts,
                        const std::vector<std::string>& techniques) {
  std::vector<std::tuple<std::string, std::string, double>> rows;
  for (size_t rooms = 1; rooms <= 10; ++rooms) {
    simulator::ScenarioConfig c;
    c.mode = simulator::SimMode::kDynamic;
    c.users = 5;
    c.rooms = rooms;
    c.seed = opts.seed;
    c.techniques = techniques;
    for (const auto& row : simulator::run_dynamic(c))
      rows.emplace_back(std::to_string(rooms), row.technique,
                        row.report.overall);
  }
  return long_csv(rows);
}

std::string study_grouping_frequency(
    const CommonOpts& opts, const std::vector<std::string>& techniques) {
  std::vector<std::tuple<std::string, std::string, double>> rows;
  for (double period : {10.0, 20.0, 30.0}) {
    simulator::ScenarioConfig c;
    c.mode = simulator::SimMode::kDynamic;
    c.users = 5;
    c.rooms = 5;
    c.grouping_period_s = period;
    c.seed = opts.seed;
    c.techniques = techniques;
    std::ostringstream x;
    x << period;
    for (const auto& row : simulator::run_dynamic(c))
      rows.emplace_back(x.str(), row.technique, row.report.overall);
  }
  return long_csv(rows);
}

std::string trimmed(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

// Flat key=value config files shadow flags. The file is expanded into
// synthetic "--key value" arguments before parsing, skipping any key
// already given on the command line, so explicit flags always win.
bool expand_config_file(std::vector<std::string>& args) {
  std::string path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      path = args[i].substr(9);
  }
  if (path.empty()) return true;
  std::ifstream f(path);
  if (!f) {
    std::cerr << "error: cannot read config file " << path << "\n";
    return false;
  }
  std::string line;
  while (std::getline(f, line)) {
    line = trimmed(line);
    auto eq = line.find('=');
    if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
    std::string flag = "--" + trimmed(line.substr(0, eq));
    std::string value = trimmed(line.substr(eq + 1));
    bool given = false;
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) given = true;
    if (!given) {
      args.push_back(flag);
      args.push_back(value);
    }
  }
  return true;
}

int guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::ConfigInvalid:
      case ErrorCode::InvalidLength:
      case ErrorCode::InvalidWindow:
      case ErrorCode::InvalidRate:
      case ErrorCode::NotFound:
        return 1;
      default:
        return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"light-pattern device grouping toolkit"};
  app.require_subcommand(1);
  int rc = 0;
  std::function<void()> action;

  // --- pattern gen ---
  auto* pattern = app.add_subcommand("pattern", "light pattern utilities");
  pattern->require_subcommand(1);
  {
    static CommonOpts opts;
    static int length = 4;
    auto* gen = pattern->add_subcommand("gen", "generate a random pattern");
    add_common(gen, opts);
    gen->add_option("--length", length, "even pattern length in [2,10]");
    gen->callback([&] {
      action = [&] {
        Rng rng(opts.seed);
        auto p = lightsig::generate_pattern(length, rng);
        std::ostringstream os;
        lightsig::write_pattern_csv(p, os);
        opts.note("length", static_cast<long long>(length));
        write_file(opts, "pattern.csv", os.str());
        write_manifest(opts, "pattern gen");
      };
    });
  }

  // --- signal synth / distort / detect ---
  auto* signal = app.add_subcommand("signal", "raw signal utilities");
  signal->require_subcommand(1);
  {
    static CommonOpts opts;
    static std::string pattern_file;
    static double window_ms = 100.0, offset_ms = 0.0, noise = 15.0;
    static int interval_us = 20;
    auto* synth = signal->add_subcommand("synth", "synthesize a signal");
    add_common(synth, opts);
    synth->add_option("--pattern", pattern_file, "pattern CSV")->required();
    synth->add_option("--window-ms", window_ms, "sensing window");
    synth->add_option("--offset-ms", offset_ms, "start offset");
    synth->add_option("--noise", noise, "noise std in mV");
    synth->add_option("--interval-us", interval_us, "sampling interval");
    synth->callback([&] {
      action = [&] {
        Rng rng(opts.seed);
        auto p = load_pattern(pattern_file);
        auto s = lightsig::synthesize_signal(
            p, window_ms, offset_ms, lightsig::kDefaultVOnMv,
            lightsig::kDefaultVOffMv, noise, rng, interval_us);
        std::ostringstream os;
        lightsig::write_signal_csv(s, os);
        opts.note("window_ms", window_ms);
        opts.note("offset_ms", offset_ms);
        write_file(opts, "signal.csv", os.str());
        write_manifest(opts, "signal synth");
      };
    });
  }
  {
    static CommonOpts opts;
    static std::string signal_file;
    static double rate = 0.0;
    auto* distort = signal->add_subcommand("distort", "replace samples with noise");
    add_common(distort, opts);
    distort->add_option("--signal", signal_file, "signal CSV")->required();
    distort->add_option("--rate", rate, "distortion rate in [0,1]");
    distort->callback([&] {
      action = [&] {
        Rng rng(opts.seed);
        auto s = load_signal(signal_file);
        auto d = lightsig::distort_signal(s, rate, rng);
        std::ostringstream os;
        lightsig::write_signal_csv(d, os);
        opts.note("rate", rate);
        write_file(opts, "distorted.csv", os.str());
        write_manifest(opts, "signal distort");
      };
    });
  }
  {
    static CommonOpts opts;
    static std::string signal_file;
    auto* detect = signal->add_subcommand("detect", "recover the pattern");
    add_common(detect, opts);
    detect->add_option("--signal", signal_file, "signal CSV")->required();
    detect->callback([&] {
      action = [&] {
        auto s = load_signal(signal_file);
        auto runs = cycledetect::extract_period_list(s);
        auto p = cycledetect::fold_to_pattern(runs);
        std::ostringstream os;
        lightsig::write_pattern_csv(p, os);
        write_file(opts, "detected.csv", os.str());
        write_manifest(opts, "signal detect");
        std::cout << "pattern length " << p.length() << ", duration "
                  << p.duration_ms() << " ms\n";
      };
    });
  }

  // --- similarity ---
  {
    static CommonOpts opts;
    static std::string file_a, file_b, metric = "pearson", equalizer = "dtw";
    static double threshold = 0.8;
    auto* sim = app.add_subcommand("similarity", "compare two signals");
    add_common(sim, opts);
    sim->add_option("--a", file_a, "first signal CSV")->required();
    sim->add_option("--b", file_b, "second signal CSV")->required();
    sim->add_option("--metric", metric,
                    "pearson|spearman|distance_correlation|dtw");
    sim->add_option("--equalizer", equalizer, "fill|cut|dtw");
    sim->add_option("--threshold", threshold, "same-region threshold");
    sim->callback([&] {
      action = [&] {
        SimilarityConfig cfg{metric_from_name(metric),
                             equalizer_from_name(equalizer), threshold};
        auto a = load_signal(file_a);
        auto b = load_signal(file_b);
        auto res = simmetrics::similarity(a.voltage_mv, b.voltage_mv, cfg);
        std::ostringstream os;
        os << "metric,equalizer,score,same_region\n";
        os << metric << "," << equalizer << "," << res.score << ","
           << (res.score >= threshold ? 1 : 0) << "\n";
        opts.note("metric", metric);
        opts.note("equalizer", equalizer);
        write_file(opts, "similarity.csv", os.str());
        write_manifest(opts, "similarity");
        std::cout << "score " << res.score << "\n";
      };
    });
  }

  // --- features extract / rank ---
  auto* features = app.add_subcommand("features", "time-series features");
  features->require_subcommand(1);
  {
    static CommonOpts opts;
    static std::string signal_file;
    auto* extract = features->add_subcommand("extract", "statistical features");
    add_common(extract, opts);
    extract->add_option("--signal", signal_file, "signal CSV")->required();
    extract->callback([&] {
      action = [&] {
        auto s = load_signal(signal_file);
        auto fv = tsfeatures::statistical_features(s.voltage_mv);
        std::ostringstream os;
        os << "name,value\n";
        for (size_t i = 0; i < fv.names.size(); ++i)
          os << fv.names[i] << "," << fv.values[i] << "\n";
        write_file(opts, "features.csv", os.str());
        write_manifest(opts, "features extract");
      };
    });
  }
  {
    static CommonOpts opts;
    static std::string matrix_file;
    auto* rank = features->add_subcommand("rank", "rank features by KS test");
    add_common(rank, opts);
    rank->add_option("--matrix", matrix_file, "labeled feature matrix CSV")
        ->required();
    rank->callback([&] {
      action = [&] {
        std::ifstream f(matrix_file);
        if (!f) fail(ErrorCode::IoError, "cannot read " + matrix_file);
        auto m = tsfeatures::read_feature_matrix_csv(f);
        auto ranked = tsfeatures::rank_features(m.X, m.y, m.names);
        std::ostringstream os;
        os << "name,p_value\n";
        for (const auto& r : ranked) os << r.name << "," << r.p_value << "\n";
        write_file(opts, "ranked.csv", os.str());
        write_manifest(opts, "features rank");
      };
    });
  }

  // --- sim static / dynamic ---
  auto* sim = app.add_subcommand("sim", "run a simulation scenario");
  sim->require_subcommand(1);
  {
    static CommonOpts opts;
    static simulator::ScenarioConfig cfg;
    static std::vector<int> lengths;
    auto* st = sim->add_subcommand("static", "single-room rounds");
    add_common(st, opts);
    st->add_option("--users", cfg.users, "users in [2,10]");
    st->add_option("--rounds", cfg.rounds, "grouping rounds");
    st->add_option("--pattern_lengths", lengths, "pattern lengths");
    st->add_option("--sensing_window_ms", cfg.sensing_window_ms,
                   "sensing window");
    st->add_option("--techniques", cfg.techniques, "technique filter");
    st->callback([&] {
      action = [&] {
        cfg.mode = simulator::SimMode::kStatic;
        cfg.seed = opts.seed;
        if (!lengths.empty()) cfg.pattern_lengths = lengths;
        opts.note("users", static_cast<long long>(cfg.users));
        opts.note("rounds", static_cast<long long>(cfg.rounds));
        write_file(opts, "report.csv", report_csv(simulator::run_static(cfg)));
        write_manifest(opts, "sim static");
      };
    });
  }
  {
    static CommonOpts opts;
    static simulator::ScenarioConfig cfg;
    static std::vector<int> lengths;
    auto* dy = sim->add_subcommand("dynamic", "multi-room mobility");
    add_common(dy, opts);
    dy->add_option("--users", cfg.users, "users in {3,5,10}");
    dy->add_option("--rooms", cfg.rooms, "rooms in [1,10]");
    dy->add_option("--grouping_period_s", cfg.grouping_period_s,
                   "10, 20 or 30 s");
    dy->add_option("--iteration_s", cfg.iteration_s, "scenario duration");
    dy->add_option("--pattern_lengths", lengths, "pattern lengths");
    dy->add_option("--techniques", cfg.techniques, "technique filter");
    dy->callback([&] {
      action = [&] {
        cfg.mode = simulator::SimMode::kDynamic;
        cfg.seed = opts.seed;
        if (!lengths.empty()) cfg.pattern_lengths = lengths;
        opts.note("users", static_cast<long long>(cfg.users));
        opts.note("rooms", static_cast<long long>(cfg.rooms));
        opts.note("grouping_period_s", cfg.grouping_period_s);
        write_file(opts, "report.csv",
                   report_csv(simulator::run_dynamic(cfg)));
        write_manifest(opts, "sim dynamic");
      };
    });
  }

  // --- study sweeps ---
  auto* study = app.add_subcommand("study", "parameter sweeps");
  study->require_subcommand(1);
  {
    static CommonOpts opts[6];
    static std::vector<std::string> techniques[6];
    const struct {
      const char* name;
      const char* help;
      std::function<std::string(const CommonOpts&,
                                const std::vector<std::string>&)> run;
      bool has_techniques;
    } defs[6] = {
        {"distortion", "median similarity vs distortion rate",
         [](const CommonOpts& o, const std::vector<std::string>&) {
           return study_distortion(o);
         },
         false},
        {"sampling-window", "minimal window ratio per pattern length",
         [](const CommonOpts& o, const std::vector<std::string>&) {
           return study_sampling_window(o);
         },
         false},
        {"users", "static overall vs user count",
         [](const CommonOpts& o, const std::vector<std::string>& t) {
           return study_users(o, t);
         },
         true},
        {"pattern-length", "static overall vs pattern length",
         [](const CommonOpts& o, const std::vector<std::string>& t) {
           return study_pattern_length(o, t);
         },
         true},
        {"rooms", "dynamic overall vs room count",
         [](const CommonOpts& o, const std::vector<std::string>& t) {
           return study_rooms(o, t);
         },
         true},
        {"grouping-frequency", "dynamic overall vs grouping period",
         [](const CommonOpts& o, const std::vector<std::string>& t) {
           return study_grouping_frequency(o, t);
         },
         true},
    };
    for (int i = 0; i < 6; ++i) {
      auto* sub = study->add_subcommand(defs[i].name, defs[i].help);
      add_common(sub, opts[i]);
      techniques[i] = {"pearson"};
      if (defs[i].has_techniques)
        sub->add_option("--techniques", techniques[i], "technique filter");
      auto run = defs[i].run;
      std::string cmd = std::string("study ") + defs[i].name;
      sub->callback([&, i, run, cmd] {
        action = [&, i, run, cmd] {
          write_file(opts[i], "study.csv", run(opts[i], techniques[i]));
          write_manifest(opts[i], cmd);
        };
      });
    }
  }

  // --- semlog generate / cluster / classify / cross ---
  auto* sl = app.add_subcommand("semlog", "association log analysis");
  sl->require_subcommand(1);
  {
    static CommonOpts opts;
    static std::string tb = "dense";
    static int days = 365;
    auto* gen = sl->add_subcommand("generate", "generate an artificial log");
    add_common(gen, opts);
    gen->add_option("--testbed", tb, "sparse|medium|dense");
    gen->add_option("--days", days, "log span in days");
    gen->callback([&] {
      action = [&] {
        Rng rng(opts.seed);
        semlog::GeneratorConfig cfg;
        cfg.days = days;
        auto log = semlog::generate_log(semlog::testbed(tb), rng, cfg);
        std::ostringstream os;
        semlog::write_log_csv(log, os);
        opts.note("testbed", tb);
        opts.note("days", static_cast<long long>(days));
        write_file(opts, "log.csv", os.str());
        write_manifest(opts, "semlog generate");
      };
    });
  }
  {
    static CommonOpts opts;
    static std::string log_file;
    static int t_days = 84;
    auto* cluster = sl->add_subcommand("cluster", "estimate group count");
    add_common(cluster, opts);
    cluster->add_option("--log", log_file, "association log CSV")->required();
    cluster->add_option("--t-days", t_days, "evaluation day");
    cluster->callback([&] {
      action = [&] {
        auto log = load_log(log_file);
        std::map<std::string, int> groups;
        for (const auto& e : log)
          for (const auto& d : e.device_ids)
            groups[d] = static_cast<int>(semlog::class_of_device(d));
        std::vector<mlkit::ClusterMethod> methods = {
            mlkit::ClusterMethod::kKmeansElbow,
            mlkit::ClusterMethod::kKmeansSilhouette,
            mlkit::ClusterMethod::kHierarchicalSilhouette,
            mlkit::ClusterMethod::kGmmBic,
            mlkit::ClusterMethod::kGmmAic,
            mlkit::ClusterMethod::kXmeans};
        double acc =
            semlog::cluster_over_time(log, groups, t_days, methods, opts.seed);
        std::ostringstream os;
        os << "t_days,accuracy\n" << t_days << "," << acc << "\n";
        opts.note("t_days", static_cast<long long>(t_days));
        write_file(opts, "cluster.csv", os.str());
        write_manifest(opts, "semlog cluster");
        std::cout << "accuracy " << acc << "\n";
      };
    });
  }
  {
    static CommonOpts opts;
    static std::string log_file, classifier = "naive_bayes";
    static std::string feature = "contact frequency per week - sum";
    auto* classify = sl->add_subcommand("classify", "cold-start analysis");
    add_common(classify, opts);
    classify->add_option("--log", log_file, "association log CSV")->required();
    classify->add_option("--classifier", classifier, "model kind");
    classify->add_option("--feature", feature, "feature set name");
    classify->callback([&] {
      action = [&] {
        auto log = load_log(log_file);
        auto res = semlog::classify_and_coldstart(
            log, model_kind_from_name(classifier), feature, opts.seed);
        std::ostringstream os;
        os << "day,accuracy,precision,recall,f1,auc\n";
        for (const auto& [day, r] : res.history)
          os << day << "," << r.accuracy << "," << r.precision << ","
             << r.recall << "," << r.f1 << "," << r.auc << "\n";
        write_file(opts, "classify.csv", os.str());
        std::ostringstream sum;
        sum << "classifier,feature,cold_start_day,accepted,f1\n";
        sum << classifier << "," << feature << "," << res.cold_start_day
            << "," << (res.accepted ? 1 : 0) << "," << res.final_report.f1
            << "\n";
        opts.note("classifier", classifier);
        opts.note("feature", feature);
        write_file(opts, "classify_summary.csv", sum.str());
        write_manifest(opts, "semlog classify");
        std::cout << "cold start day " << res.cold_start_day << "\n";
      };
    });
  }
  {
    static CommonOpts opts;
    static int days = 120;
    auto* cross = sl->add_subcommand("cross", "3x3 cross-testbed grid");
    add_common(cross, opts);
    cross->add_option("--days", days, "log span in days");
    cross->callback([&] {
      action = [&] {
        const std::vector<std::string> testbeds = {"sparse", "medium",
                                                   "dense"};
        semlog::GeneratorConfig cfg;
        cfg.days = days;
        std::map<std::string, semlog::AssociationLog> logs;
        for (const auto& name : testbeds) {
          Rng rng(opts.seed * 31u + static_cast<unsigned>(logs.size()));
          logs[name] = semlog::generate_log(semlog::testbed(name), rng, cfg);
        }
        const std::vector<ModelKind> kinds = {ModelKind::kNaiveBayes,
                                              ModelKind::kAdaBoost};
        const std::vector<std::string> feats = {
            "contact frequency per week - sum", "contact frequency per day",
            "grouping time per day"};
        std::ostringstream os;
        os << "train,test,classifier,feature,accuracy,recall\n";
        for (const auto& train : testbeds)
          for (const auto& test : testbeds) {
            auto best = semlog::cross_testbed(logs[train], logs[test], kinds,
                                              feats, opts.seed);
            os << train << "," << test << ","
               << (best.kind == ModelKind::kNaiveBayes ? "naive_bayes"
                                                       : "ada_boost")
               << "," << best.feature_name << "," << best.report.accuracy
               << "," << best.report.recall << "\n";
          }
        opts.note("days", static_cast<long long>(days));
        write_file(opts, "cross.csv", os.str());
        write_manifest(opts, "semlog cross");
      };
    });
  }

  // --- protocol check ---
  {
    static CommonOpts opts;
    static int count = 10000;
    auto* proto = app.add_subcommand("protocol", "wire protocol checks");
    proto->require_subcommand(1);
    auto* check = proto->add_subcommand("check", "round-trip property");
    add_common(check, opts);
    check->add_option("--count", count, "random messages to test");
    check->callback([&] {
      action = [&] {
        Rng rng(opts.seed);
        std::uniform_int_distribution<size_t> len(0, 4096);
        std::uniform_int_distribution<int> byte(0, 255);
        std::uniform_int_distribution<int> type(1, 4);
        for (int i = 0; i < count; ++i) {
          Message m;
          m.msg_type = static_cast<MsgType>(type(rng));
          m.payload.resize(len(rng));
          for (auto& c : m.payload) c = static_cast<char>(byte(rng));
          if (!(protocol::parse(protocol::frame(m)) == m))
            fail(ErrorCode::BadType, "round trip mismatch");
        }
        auto good = protocol::frame({MsgType::kLightPattern, "x"});
        bool rejected = false;
        try {
          auto bad = good;
          bad[0] = 99;
          protocol::parse(bad);
        } catch (const Error&) {
          rejected = true;
        }
        if (!rejected) fail(ErrorCode::BadType, "malformed frame accepted");
        opts.note("count", static_cast<long long>(count));
        write_manifest(opts, "protocol check");
        std::cout << "ok, " << count << " messages\n";
      };
    });
  }

  std::vector<std::string> args(argv + 1, argv + argc);
  if (!expand_config_file(args)) return 1;
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (action) rc = guarded(action);
  return rc;
}
