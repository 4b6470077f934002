#pragma once

#include <map>
#include <optional>
#include <set>

#include "lumigroup/lightsig.hpp"
#include "lumigroup/simmetrics.hpp"

namespace lumigroup {

// --- framed message protocol ---
// Wire layout: 1 type byte, 4-byte big-endian payload length, payload.

enum class MsgType : std::uint8_t {
  kRawLightSignal = 1,
  kLightPattern = 2,
  kWifiScan = 3,
  kBluetoothScan = 4,
};

struct Message {
  MsgType msg_type = MsgType::kRawLightSignal;
  std::string payload;
  friend bool operator==(const Message&, const Message&) = default;
};

namespace protocol {

inline bool valid_type(std::uint8_t t) { return t >= 1 && t <= 4; }

inline std::string frame(const Message& m) {
  if (!valid_type(static_cast<std::uint8_t>(m.msg_type)))
    fail(ErrorCode::BadType, "message type must be 1..4");
  if (m.payload.size() > 0xFFFFFFFFull)
    fail(ErrorCode::LengthMismatch, "payload exceeds 4-byte length field");
  std::string out;
  out.reserve(5 + m.payload.size());
  out.push_back(static_cast<char>(m.msg_type));
  std::uint32_t len = static_cast<std::uint32_t>(m.payload.size());
  for (int shift = 24; shift >= 0; shift -= 8)
    out.push_back(static_cast<char>((len >> shift) & 0xFF));
  out += m.payload;
  return out;
}

inline Message parse(const std::string& bytes) {
  if (bytes.size() < 5)
    fail(ErrorCode::Truncated, "frame shorter than its 5-byte header");
  std::uint8_t type = static_cast<std::uint8_t>(bytes[0]);
  if (!valid_type(type))
    fail(ErrorCode::BadType,
         "unknown message type " + std::to_string(int(type)));
  std::uint32_t len = 0;
  for (int i = 1; i <= 4; ++i)
    len = (len << 8) | static_cast<std::uint8_t>(bytes[i]);
  if (bytes.size() - 5 < len)
    fail(ErrorCode::Truncated, "payload shorter than declared length");
  if (bytes.size() - 5 > len)
    fail(ErrorCode::LengthMismatch, "trailing bytes after payload");
  Message m;
  m.msg_type = static_cast<MsgType>(type);
  m.payload = bytes.substr(5, len);
  return m;
}

inline Message signal_message(const RawLightSignal& s) {
  std::ostringstream os;
  lightsig::write_signal_csv(s, os);
  return {MsgType::kRawLightSignal, os.str()};
}

inline RawLightSignal signal_from_message(const Message& m) {
  if (m.msg_type != MsgType::kRawLightSignal)
    fail(ErrorCode::BadType, "expected a raw light signal message");
  std::istringstream is(m.payload);
  return lightsig::read_signal_csv(is);
}

}  // namespace protocol

// --- grouping engine ---

namespace detail {

// Clients sensing the same light start their windows at different
// times, so compare only the overlapping time span, sample for
// sample. Falls back to the raw vectors when the sampling intervals
// differ or the spans barely overlap.
inline std::pair<std::vector<double>, std::vector<double>> aligned_vectors(
    const RawLightSignal& a, const RawLightSignal& b) {
  if (a.sampling_interval_us != b.sampling_interval_us ||
      a.sampling_interval_us <= 0 || a.size() == 0 || b.size() == 0)
    return {a.voltage_mv, b.voltage_mv};
  std::int64_t dt = a.sampling_interval_us;
  std::int64_t start = std::max(a.start_us, b.start_us);
  std::int64_t end =
      std::min(a.start_us + static_cast<std::int64_t>(a.size()) * dt,
               b.start_us + static_cast<std::int64_t>(b.size()) * dt);
  if (end - start < 2 * dt) return {a.voltage_mv, b.voltage_mv};
  auto slice = [&](const RawLightSignal& s) {
    size_t i0 = static_cast<size_t>((start - s.start_us + dt / 2) / dt);
    size_t n = static_cast<size_t>((end - start) / dt);
    i0 = std::min(i0, s.size() - 1);
    n = std::min(n, s.size() - i0);
    return std::vector<double>(s.voltage_mv.begin() + i0,
                               s.voltage_mv.begin() + i0 + n);
  };
  auto va = slice(a);
  auto vb = slice(b);
  size_t n = std::min(va.size(), vb.size());
  va.resize(n);
  vb.resize(n);
  return {va, vb};
}

}  // namespace detail

enum class BulbRole { kMaster, kSlave };
enum class GroupMode { kDeviceToDevice, kDeviceToArea };

struct Bulb {
  std::string bulb_id;
  std::string area_id;
  BulbRole role = BulbRole::kSlave;
  LightPattern current_pattern;
};

struct DeviceGroup {
  int group_id = 0;
  GroupMode mode = GroupMode::kDeviceToDevice;
  std::set<std::string> members;
  std::string area_id;  // set iff mode is device-to-area
};

struct GroupingDecision {
  bool evaluated = false;
  bool joined_existing = false;
  bool unbound = false;  // device-to-area: no area passed the threshold
  int group_id = -1;
  std::string area_id;
};

struct EngineConfig {
  GroupMode mode = GroupMode::kDeviceToDevice;
  SimilarityConfig similarity = simmetrics::kDefault;
  int pattern_length = 4;
};

// Single-writer grouping state machine. Clients submit light payloads
// tagged with the pattern epoch they observed; evaluations never
// compare payloads across epochs.
class GroupEngine {
 public:
  explicit GroupEngine(EngineConfig config = {}) : config_(config) {}

  void register_bulb(const std::string& bulb_id, const std::string& area_id) {
    if (bulbs_.count(bulb_id))
      fail(ErrorCode::DuplicateId, "bulb already registered: " + bulb_id);
    bulbs_[bulb_id] = Bulb{bulb_id, area_id, BulbRole::kSlave, {}};
  }

  void register_router(const std::string& router_id) {
    if (routers_.count(router_id))
      fail(ErrorCode::DuplicateId, "router already registered: " + router_id);
    routers_.insert(router_id);
  }

  // One random master per area; a fresh pattern per master, mirrored
  // by the area's slaves.
  void assign_masters(Rng& rng) {
    std::map<std::string, std::vector<std::string>> by_area;
    for (auto& [id, bulb] : bulbs_) by_area[bulb.area_id].push_back(id);
    for (auto& [area, ids] : by_area) {
      std::uniform_int_distribution<size_t> pick(0, ids.size() - 1);
      const std::string& master = ids[pick(rng)];
      auto pattern = lightsig::generate_pattern(config_.pattern_length, rng);
      for (const auto& id : ids) {
        bulbs_[id].role = id == master ? BulbRole::kMaster : BulbRole::kSlave;
        bulbs_[id].current_pattern = pattern;
      }
      area_patterns_[area] = pattern;
    }
  }

  // Pins an area to a backend-chosen pattern (all bulbs follow).
  void set_area_pattern(const std::string& area, const LightPattern& pattern) {
    area_patterns_[area] = pattern;
    for (auto& [id, bulb] : bulbs_)
      if (bulb.area_id == area) bulb.current_pattern = pattern;
  }

  // Semantic linking: area b mirrors area a's pattern.
  void link_areas(const std::string& a, const std::string& b) {
    auto it = area_patterns_.find(a);
    if (it == area_patterns_.end())
      fail(ErrorCode::NotFound, "no pattern assigned to area " + a);
    area_patterns_[b] = it->second;
    for (auto& [id, bulb] : bulbs_)
      if (bulb.area_id == b) bulb.current_pattern = it->second;
  }

  // Rotates every master pattern and advances the epoch; payloads
  // sensed before the refresh no longer match any group.
  void refresh_patterns(Rng& rng) {
    ++epoch_;
    for (auto& [area, pattern] : area_patterns_) {
      pattern = lightsig::generate_pattern(config_.pattern_length, rng);
      for (auto& [id, bulb] : bulbs_)
        if (bulb.area_id == area) bulb.current_pattern = pattern;
    }
  }

  std::uint64_t epoch() const { return epoch_; }

  void on_client_connect(const std::string& client_id,
                         const std::string& router_id, Rng& rng) {
    sessions_[client_id] = router_id;
    evaluate_client(client_id, rng);
  }

  void on_client_disconnect(const std::string& client_id) {
    auto it = sessions_.find(client_id);
    if (it == sessions_.end())
      fail(ErrorCode::UnknownClient, "unknown client: " + client_id);
    sessions_.erase(it);
    payloads_.erase(client_id);
    remove_from_group(client_id);
  }

  void set_client_payload(const std::string& client_id,
                          const RawLightSignal& signal) {
    if (!sessions_.count(client_id))
      fail(ErrorCode::UnknownClient, "unknown client: " + client_id);
    payloads_[client_id] = Payload{signal, epoch_};
  }

  void periodic_tick(Rng& rng) {
    for (const auto& [client, router] : sessions_)
      evaluate_client(client, rng);
  }

  GroupingDecision evaluate_client(const std::string& client_id, Rng& rng) {
    return config_.mode == GroupMode::kDeviceToDevice
               ? evaluate_d2d(client_id, rng)
               : evaluate_d2a(client_id, rng);
  }

  // Uniform choice among a group's members; the comparison target for
  // device-to-device evaluation.
  std::string pick_representative(const DeviceGroup& group, Rng& rng) const {
    std::vector<std::string> members(group.members.begin(),
                                     group.members.end());
    std::uniform_int_distribution<size_t> pick(0, members.size() - 1);
    return members[pick(rng)];
  }

  GroupingDecision evaluate_d2d(const std::string& client_id, Rng& rng) {
    GroupingDecision dec;
    auto payload = payloads_.find(client_id);
    if (payload == payloads_.end() || payload->second.epoch != epoch_)
      return dec;  // nothing current to compare
    if (sessions_.size() < 2) return dec;  // needs two connected clients

    remove_from_group(client_id);
    dec.evaluated = true;
    double best_score = -1.0;
    int best_group = -1;
    std::string best_singleton;
    for (auto& [gid, group] : groups_) {
      std::string rep = pick_representative(group, rng);
      auto other = payloads_.find(rep);
      if (other == payloads_.end() || other->second.epoch != epoch_) continue;
      auto [va, vb] = detail::aligned_vectors(payload->second.signal,
                                              other->second.signal);
      double score = simmetrics::similarity(va, vb, config_.similarity).score;
      if (score > best_score) {
        best_score = score;
        best_group = gid;
      }
    }
    // Ungrouped clients are fallback candidates so the first pair can
    // form a group at all; existing groups always take precedence,
    // otherwise matching peers fragment into fresh pairs.
    double best_single_score = -1.0;
    for (const auto& [other_id, other] : payloads_) {
      if (other_id == client_id || other.epoch != epoch_) continue;
      if (member_group_.count(other_id)) continue;
      auto [va, vb] =
          detail::aligned_vectors(payload->second.signal, other.signal);
      double score = simmetrics::similarity(va, vb, config_.similarity).score;
      if (score > best_single_score) {
        best_single_score = score;
        best_singleton = other_id;
      }
    }
    if (best_score >= config_.similarity.threshold) {
      join(client_id, best_group);
      dec.joined_existing = true;
      dec.group_id = best_group;
    } else if (best_single_score >= config_.similarity.threshold) {
      int gid = new_group(GroupMode::kDeviceToDevice, "");
      join(best_singleton, gid);
      join(client_id, gid);
      dec.group_id = gid;
    } else {
      int gid = new_group(GroupMode::kDeviceToDevice, "");
      join(client_id, gid);
      dec.group_id = gid;
    }
    check_invariants();
    return dec;
  }

  GroupingDecision evaluate_d2a(const std::string& client_id, Rng& rng) {
    GroupingDecision dec;
    auto payload = payloads_.find(client_id);
    if (payload == payloads_.end() || payload->second.epoch != epoch_)
      return dec;
    dec.evaluated = true;
    remove_from_group(client_id);
    double best_score = -1.0;
    std::string best_area;
    const auto& sig = payload->second.signal;
    for (const auto& [area, pattern] : area_patterns_) {
      // Phase-align the reference: the pattern repeats, so only the
      // client's start time modulo the pattern period matters.
      double period_us = pattern.duration_ms() * 1000.0;
      std::int64_t offset_us = 0;
      if (period_us > 0.0) {
        offset_us = static_cast<std::int64_t>(
            std::llround(std::fmod(static_cast<double>(sig.start_us),
                                   period_us)));
        if (offset_us < 0)
          offset_us += static_cast<std::int64_t>(std::llround(period_us));
        // Snap to the sample grid so the reference cache stays small.
        std::int64_t dt = sig.sampling_interval_us;
        if (dt > 0) offset_us = (offset_us + dt / 2) / dt * dt;
      }
      auto ref = reference_signal(area, sig.size(), sig.sampling_interval_us,
                                  offset_us, rng);
      double score =
          simmetrics::similarity(sig.voltage_mv, ref, config_.similarity)
              .score;
      if (score > best_score || (score == best_score && area < best_area)) {
        best_score = score;
        best_area = area;
      }
    }
    if (best_score >= config_.similarity.threshold) {
      dec.area_id = best_area;
      int gid = area_group(best_area);
      join(client_id, gid);
      dec.group_id = gid;
    } else {
      dec.unbound = true;
    }
    check_invariants();
    return dec;
  }

  // Noiseless synthesis of the area's current pattern, matching the
  // client's sample count, interval, and start phase; cached per
  // (area, epoch, shape, phase).
  std::vector<double> reference_signal(const std::string& area, size_t samples,
                                       std::int32_t interval_us,
                                       std::int64_t offset_us, Rng& rng) {
    auto it = area_patterns_.find(area);
    if (it == area_patterns_.end())
      fail(ErrorCode::NotFound, "no pattern assigned to area " + area);
    auto key = std::tuple{area, epoch_,
                          samples * 100000 + static_cast<size_t>(interval_us),
                          offset_us};
    auto cached = reference_cache_.find(key);
    if (cached != reference_cache_.end()) return cached->second;
    size_t n = samples > 0 ? samples : 1024;
    double window_ms =
        static_cast<double>(n) * static_cast<double>(interval_us) / 1000.0;
    auto s = lightsig::synthesize_signal(
        it->second, window_ms, static_cast<double>(offset_us) / 1000.0,
        lightsig::kDefaultVOnMv, lightsig::kDefaultVOffMv, 0.0, rng,
        interval_us);
    reference_cache_[key] = s.voltage_mv;
    return s.voltage_mv;
  }

  const std::map<int, DeviceGroup>& groups() const { return groups_; }
  const std::map<std::string, Bulb>& bulbs() const { return bulbs_; }
  std::optional<int> group_of(const std::string& client_id) const {
    auto it = member_group_.find(client_id);
    if (it == member_group_.end()) return std::nullopt;
    return it->second;
  }

  // Invariant checks: disjoint groups, one master per area.
  void check_invariants() const {
    std::set<std::string> seen;
    for (const auto& [gid, group] : groups_) {
      if (group.members.empty())
        fail(ErrorCode::ConfigInvalid, "empty group retained");
      for (const auto& m : group.members) {
        if (!seen.insert(m).second)
          fail(ErrorCode::ConfigInvalid, "client in two groups: " + m);
        auto it = member_group_.find(m);
        if (it == member_group_.end() || it->second != gid)
          fail(ErrorCode::ConfigInvalid, "membership index out of sync");
      }
    }
    std::map<std::string, int> masters;
    for (const auto& [id, bulb] : bulbs_)
      if (bulb.role == BulbRole::kMaster) ++masters[bulb.area_id];
    for (const auto& [area, pattern] : area_patterns_) {
      (void)pattern;
      bool has_bulb = false;
      for (const auto& [id, bulb] : bulbs_) has_bulb |= bulb.area_id == area;
      if (has_bulb && masters[area] != 1)
        fail(ErrorCode::ConfigInvalid, "area lacks a unique master: " + area);
    }
  }

 private:
  struct Payload {
    RawLightSignal signal;
    std::uint64_t epoch = 0;
  };

  int new_group(GroupMode mode, const std::string& area) {
    int gid = next_group_id_++;
    groups_[gid] = DeviceGroup{gid, mode, {}, area};
    return gid;
  }

  int area_group(const std::string& area) {
    for (auto& [gid, group] : groups_)
      if (group.mode == GroupMode::kDeviceToArea && group.area_id == area)
        return gid;
    return new_group(GroupMode::kDeviceToArea, area);
  }

  void join(const std::string& client_id, int gid) {
    groups_[gid].members.insert(client_id);
    member_group_[client_id] = gid;
  }

  void remove_from_group(const std::string& client_id) {
    auto it = member_group_.find(client_id);
    if (it == member_group_.end()) return;
    auto& group = groups_[it->second];
    group.members.erase(client_id);
    if (group.members.empty()) groups_.erase(it->second);
    member_group_.erase(it);
  }

  EngineConfig config_;
  std::map<std::string, Bulb> bulbs_;
  std::set<std::string> routers_;
  std::map<std::string, LightPattern> area_patterns_;
  std::map<std::string, std::string> sessions_;  // client -> router
  std::map<std::string, Payload> payloads_;
  std::map<int, DeviceGroup> groups_;
  std::map<std::string, int> member_group_;
  std::map<std::tuple<std::string, std::uint64_t, size_t, std::int64_t>,
           std::vector<double>>
      reference_cache_;
  std::uint64_t epoch_ = 0;
  int next_group_id_ = 0;
};

}  // namespace lumigroup
