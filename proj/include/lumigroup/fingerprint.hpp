#pragma once

#include <array>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "lumigroup/common.hpp"

namespace lumigroup {

enum class RadioKind { kWifi, kBluetooth };

struct RadioScan {
  RadioKind kind = RadioKind::kWifi;
  double t_s = 0.0;
  // station id -> RSSI in dBm, one entry per station
  std::map<std::string, double> observations;
};

struct RoomProfile {
  std::string room_id;
  std::map<std::string, double> mean_rssi;
};

namespace fingerprint {

inline constexpr double kMissingRssiDbm = -100.0;
inline constexpr double kTopBandDb = 6.0;
inline constexpr double kDefaultWindowS = 5.0;

struct PairFeatures {
  static constexpr size_t kCount = 10;
  // Order: overlap, union_size, jaccard_distance, non_overlap,
  // manhattan, euclidean, spearman, pearson, share_top, share_top_band.
  std::array<double, kCount> values{};
  bool correlation_flagged = false;  // overlap < 2 or zero variance

  static const std::array<std::string, kCount>& names() {
    static const std::array<std::string, kCount> n = {
        "overlap",   "union_size", "jaccard_distance", "non_overlap",
        "manhattan", "euclidean",  "spearman",         "pearson",
        "share_top", "share_top_band"};
    return n;
  }
};

inline PairFeatures pair_features(const RadioScan& a, const RadioScan& b) {
  if (a.kind != b.kind)
    fail(ErrorCode::KindMismatch, "scans must share the radio kind");
  PairFeatures f;
  std::vector<double> ra, rb;
  size_t overlap = 0;
  for (const auto& [id, rssi] : a.observations) {
    auto it = b.observations.find(id);
    if (it != b.observations.end()) {
      ++overlap;
      ra.push_back(rssi);
      rb.push_back(it->second);
    }
  }
  size_t union_size = a.observations.size() + b.observations.size() - overlap;
  f.values[0] = static_cast<double>(overlap);
  f.values[1] = static_cast<double>(union_size);
  f.values[2] = union_size == 0
                    ? 0.0
                    : 1.0 - static_cast<double>(overlap) /
                                static_cast<double>(union_size);
  f.values[3] = static_cast<double>(union_size - overlap);
  double manhattan = 0.0, euclidean = 0.0;
  for (size_t i = 0; i < ra.size(); ++i) {
    manhattan += std::abs(ra[i] - rb[i]);
    euclidean += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  }
  f.values[4] = manhattan;
  f.values[5] = std::sqrt(euclidean);
  bool deg_s = false, deg_p = false;
  f.values[6] = stats::pearson(stats::ranks(ra), stats::ranks(rb), &deg_s);
  f.values[7] = stats::pearson(ra, rb, &deg_p);
  f.correlation_flagged = deg_s || deg_p;
  auto top_station = [](const RadioScan& s) {
    std::string best;
    double rssi = -1e9;
    for (const auto& [id, r] : s.observations)
      if (r > rssi || (r == rssi && id < best)) {
        rssi = r;
        best = id;
      }
    return std::pair{best, rssi};
  };
  if (!a.observations.empty() && !b.observations.empty()) {
    auto [ta, rssi_a] = top_station(a);
    auto [tb, rssi_b] = top_station(b);
    f.values[8] = ta == tb ? 1.0 : 0.0;
    // Stations within kTopBandDb of each scan's own top, intersected.
    for (const auto& [id, r] : a.observations) {
      if (rssi_a - r > kTopBandDb) continue;
      auto it = b.observations.find(id);
      if (it != b.observations.end() && rssi_b - it->second <= kTopBandDb) {
        f.values[9] = 1.0;
        break;
      }
    }
  }
  return f;
}

namespace detail {

inline double cosine_distance(const std::vector<double>& a,
                              const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) return 1.0;
  return 1.0 - dot / std::sqrt(na * nb);
}

}  // namespace detail

// Nearest room by cosine distance over the union station space; a
// station missing from a vector contributes kMissingRssiDbm. Ties go
// to the lexicographically smaller room_id.
inline std::string cbf_localize(const RadioScan& scan,
                                const std::vector<RoomProfile>& profiles) {
  if (profiles.empty()) fail(ErrorCode::NoProfiles, "no room profiles");
  std::set<std::string> stations;
  for (const auto& [id, rssi] : scan.observations) stations.insert(id);
  for (const auto& p : profiles)
    for (const auto& [id, rssi] : p.mean_rssi) stations.insert(id);
  auto vectorize = [&](const std::map<std::string, double>& obs) {
    std::vector<double> v;
    v.reserve(stations.size());
    for (const auto& id : stations) {
      auto it = obs.find(id);
      v.push_back(it == obs.end() ? kMissingRssiDbm : it->second);
    }
    return v;
  };
  auto sv = vectorize(scan.observations);
  std::string best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& p : profiles) {
    double d = detail::cosine_distance(sv, vectorize(p.mean_rssi));
    if (d < best_d || (d == best_d && p.room_id < best)) {
      best_d = d;
      best = p.room_id;
    }
  }
  return best;
}

// Mean RSSI per station over the scans of one room.
inline RoomProfile build_room_profile(const std::string& room_id,
                                      const std::vector<RadioScan>& scans) {
  if (scans.empty()) fail(ErrorCode::EmptyInput, "no scans for profile");
  RoomProfile p;
  p.room_id = room_id;
  std::map<std::string, std::pair<double, double>> acc;  // sum, count
  for (const auto& s : scans)
    for (const auto& [id, rssi] : s.observations) {
      acc[id].first += rssi;
      acc[id].second += 1.0;
    }
  for (const auto& [id, sc] : acc) p.mean_rssi[id] = sc.first / sc.second;
  return p;
}

// --- synthetic environment ---

struct Station {
  std::string id;
  double x = 0.0, y = 0.0;
  size_t room = 0;
};

// Log-distance path loss world: stations scattered around room
// centers, RSSI(d) = -40 - 25 log10(max(d, 1 m)) + N(0, sigma).
struct SynthEnvironment {
  RadioKind kind = RadioKind::kWifi;
  std::vector<std::pair<double, double>> room_centers;
  std::vector<Station> stations;
  double noise_sigma_db = 4.0;

  double rssi_at(const Station& st, double x, double y, Rng& rng) const {
    double d = std::hypot(x - st.x, y - st.y);
    double rssi = -40.0 - 25.0 * std::log10(std::max(d, 1.0));
    if (noise_sigma_db > 0.0) {
      std::normal_distribution<double> noise(0.0, noise_sigma_db);
      rssi += noise(rng);
    }
    return std::clamp(rssi, -100.0, 0.0);
  }

  RadioScan scan_at(double x, double y, double t_s, Rng& rng) const {
    RadioScan s;
    s.kind = kind;
    s.t_s = t_s;
    for (const auto& st : stations)
      s.observations[st.id] = rssi_at(st, x, y, rng);
    return s;
  }

  // count scans at 1 Hz from a fixed position.
  std::vector<RadioScan> scan_stream(double x, double y, size_t count,
                                     Rng& rng, double t0_s = 0.0) const {
    std::vector<RadioScan> out;
    for (size_t i = 0; i < count; ++i)
      out.push_back(scan_at(x, y, t0_s + static_cast<double>(i), rng));
    return out;
  }
};

inline SynthEnvironment synth_environment(
    size_t n_rooms, size_t aps_per_room,
    const std::vector<std::pair<double, double>>& layout, Rng& rng,
    RadioKind kind = RadioKind::kWifi) {
  if (n_rooms == 0 || layout.size() != n_rooms)
    fail(ErrorCode::ConfigInvalid, "layout must list one center per room");
  SynthEnvironment env;
  env.kind = kind;
  env.room_centers = layout;
  std::uniform_real_distribution<double> jitter(-1.5, 1.5);
  for (size_t r = 0; r < n_rooms; ++r)
    for (size_t a = 0; a < aps_per_room; ++a) {
      Station st;
      st.id = "ap_" + std::to_string(r) + "_" + std::to_string(a);
      st.x = layout[r].first + jitter(rng);
      st.y = layout[r].second + jitter(rng);
      st.room = r;
      env.stations.push_back(st);
    }
  return env;
}

// Two-row grid with 3 m inter-room distance, matching the simulator.
inline std::vector<std::pair<double, double>> grid_layout(size_t n_rooms,
                                                          double spacing_m =
                                                              3.0) {
  std::vector<std::pair<double, double>> centers;
  for (size_t i = 0; i < n_rooms; ++i)
    centers.emplace_back(static_cast<double>(i / 2) * spacing_m,
                         static_cast<double>(i % 2) * spacing_m);
  return centers;
}

// --- scan CSV: kind,t_s,station_id,rssi_dbm ---

inline void write_scans_csv(const std::vector<RadioScan>& scans,
                            std::ostream& os) {
  os << "kind,t_s,station_id,rssi_dbm\n";
  for (const auto& s : scans)
    for (const auto& [id, rssi] : s.observations)
      os << (s.kind == RadioKind::kWifi ? "wifi" : "bluetooth") << ","
         << s.t_s << "," << id << "," << rssi << "\n";
}

inline std::vector<RadioScan> read_scans_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) fail(ErrorCode::IoError, "empty scan file");
  std::vector<RadioScan> scans;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string kind, t, id, rssi;
    if (!std::getline(row, kind, ',') || !std::getline(row, t, ',') ||
        !std::getline(row, id, ',') || !std::getline(row, rssi))
      fail(ErrorCode::IoError, "malformed scan row: " + line);
    RadioKind rk;
    if (kind == "wifi")
      rk = RadioKind::kWifi;
    else if (kind == "bluetooth")
      rk = RadioKind::kBluetooth;
    else
      fail(ErrorCode::IoError, "unknown radio kind: " + kind);
    double t_s = std::stod(t);
    if (scans.empty() || scans.back().kind != rk || scans.back().t_s != t_s)
      scans.push_back({rk, t_s, {}});
    scans.back().observations[id] = std::stod(rssi);
  }
  return scans;
}

}  // namespace fingerprint
}  // namespace lumigroup
