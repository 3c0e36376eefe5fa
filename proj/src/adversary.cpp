#include "tracebench/adversary.hpp"

#include <algorithm>
#include <unordered_map>

namespace tracebench {

namespace {

const GeoPoint* position_of(const std::map<UserId, GeoPoint>& positions, UserId u) {
  auto it = positions.find(u);
  return it == positions.end() ? nullptr : &it->second;
}

std::string id_key(const Bytes& b) { return std::string(b.begin(), b.end()); }

}  // namespace

void validate(const RelayLink& link, const RadioModel& model) {
  if (!is_valid(link.endpoint_a) || !is_valid(link.endpoint_b)) throw ConfigError("relay endpoints must be valid");
  if (!(link.range_m > 0.0)) throw ConfigError("relay range_m must be positive");
  if (distance_meters(link.endpoint_a, link.endpoint_b) <= model.max_range_m) {
    throw ConfigError("relay endpoints must be farther apart than the radio range");
  }
}

std::vector<RelayCapture> atk_relay_capture(const RelayLink& link, const std::vector<BroadcastEvent>& events,
                                            const std::map<UserId, GeoPoint>& positions) {
  std::vector<RelayCapture> out;
  for (const BroadcastEvent& ev : events) {
    if (ev.origin != Origin::kGenuine) continue;
    const GeoPoint* p = position_of(positions, ev.sender);
    if (!p) continue;
    if (distance_meters(*p, link.endpoint_a) <= link.range_m) out.push_back({ev.sender, ev.payload, true});
    if (distance_meters(*p, link.endpoint_b) <= link.range_m) out.push_back({ev.sender, ev.payload, false});
  }
  return out;
}

std::vector<BroadcastEvent> atk_relay_emit(const RelayLink& link, const std::vector<RelayCapture>& captures,
                                           const std::map<UserId, GeoPoint>& positions, Seconds now,
                                           const RadioModel& model, RandomStream& rand) {
  RadioModel relay_radio = model;
  relay_radio.max_range_m = link.range_m;
  std::vector<BroadcastEvent> out;
  for (const RelayCapture& c : captures) {
    const GeoPoint& at = c.to_b ? link.endpoint_b : link.endpoint_a;
    BroadcastEvent ev{c.sender, c.payload, now, {}, Origin::kRelay};
    for (const auto& [u, p] : positions) {
      if (u == c.sender) continue;
      if (auto rssi = radio_observe(relay_radio, distance_meters(p, at), rand)) ev.heard_by.push_back({u, *rssi});
    }
    if (!ev.heard_by.empty()) out.push_back(std::move(ev));
  }
  return out;
}

std::vector<BroadcastEvent> atk_relay(const RelayLink& link, const std::vector<BroadcastEvent>& events,
                                      const std::map<UserId, GeoPoint>& positions, const RadioModel& model,
                                      RandomStream& rand) {
  const Seconds now = events.empty() ? 0 : events.front().time_s;
  return atk_relay_emit(link, atk_relay_capture(link, events, positions), positions, now, model, rand);
}

std::vector<BroadcastEvent> RelayState::step(const std::vector<BroadcastEvent>& events,
                                             const std::map<UserId, GeoPoint>& positions, Seconds now,
                                             const RadioModel& model, RandomStream& rand) {
  pending_.push_back(atk_relay_capture(link_, events, positions));
  if (pending_.size() <= link_.latency_ticks) return {};
  auto due = std::move(pending_.front());
  pending_.pop_front();
  return atk_relay_emit(link_, due, positions, now, model, rand);
}

void validate(const RangeExtender& ext, const RadioModel& model) {
  if (!is_valid(ext.center)) throw ConfigError("extender center must be valid");
  if (ext.radius_m <= model.max_range_m) throw ConfigError("extender radius must exceed the radio range");
  if (ext.rssi_dbm < model.band.min_dbm || ext.rssi_dbm > model.band.max_dbm) {
    throw ConfigError("extender rssi outside the signal band");
  }
}

std::vector<BroadcastEvent> atk_range_extender(const RangeExtender& ext, const std::vector<BroadcastEvent>& events,
                                               const std::map<UserId, GeoPoint>& positions) {
  std::vector<UserId> inside;
  for (const auto& [u, p] : positions) {
    if (distance_meters(p, ext.center) <= ext.radius_m) inside.push_back(u);
  }
  std::vector<BroadcastEvent> out;
  if (inside.size() < 2) return out;
  for (const BroadcastEvent& ev : events) {
    if (ev.origin != Origin::kGenuine) continue;
    if (!std::binary_search(inside.begin(), inside.end(), ev.sender)) continue;
    BroadcastEvent amp{ev.sender, ev.payload, ev.time_s, {}, Origin::kExtender};
    for (UserId u : inside) {
      if (u != ev.sender) amp.heard_by.push_back({u, SignalStrength{ext.rssi_dbm}});
    }
    out.push_back(std::move(amp));
  }
  return out;
}

void atk_record_node(AttackerState& attacker, UserId node, const std::vector<BroadcastEvent>& events,
                     const std::map<UserId, GeoPoint>& positions, double sight_m) {
  const GeoPoint* here = position_of(positions, node);
  if (!here) return;
  std::vector<UserId> nearby;
  for (const auto& [u, p] : positions) {
    if (u != node && distance_meters(p, *here) <= sight_m) nearby.push_back(u);
  }
  for (const BroadcastEvent& ev : events) {
    for (const Hearing& h : ev.heard_by) {
      if (h.user != node) continue;
      attacker.recorded.push_back({ev.payload, ev.time_s, *here, h.rssi, ev.sender, nearby});
    }
  }
}

void atk_record_sensors(AttackerState& attacker, const std::vector<BroadcastEvent>& events,
                        const std::map<UserId, GeoPoint>& positions, double range_m, const RadioModel& model) {
  for (const BroadcastEvent& ev : events) {
    if (ev.origin != Origin::kGenuine) continue;
    const GeoPoint* p = position_of(positions, ev.sender);
    if (!p) continue;
    for (const GeoPoint& s : attacker.sensors) {
      const double d = distance_meters(*p, s);
      if (d > range_m) continue;
      attacker.recorded.push_back({ev.payload, ev.time_s, s, SignalStrength{noiseless_rssi(model, d)}, ev.sender, {}});
    }
  }
}

std::vector<UserId> atk_targeted_identification(const AttackerState& attacker, const std::vector<UserId>& targets,
                                                const std::vector<Publication>& publications,
                                                std::int64_t horizon_days, std::size_t ids_per_day) {
  std::unordered_map<std::string, std::vector<std::size_t>> by_id;
  for (std::size_t i = 0; i < attacker.recorded.size(); ++i) by_id[id_key(attacker.recorded[i].id)].push_back(i);
  const std::set<UserId> target_set(targets.begin(), targets.end());
  std::set<UserId> identified;
  for (const Publication& pub : publications) {
    std::int64_t last = pub.start_day + horizon_days - 1;
    if (pub.end_day) last = std::min(last, *pub.end_day);
    for (DailyKey k{pub.start_day, pub.sk}; k.day <= last; k = dp3t_next_key(k)) {
      for (const EphemeralId& id : dp3t_ids(k, ids_per_day)) {
        auto hit = by_id.find(std::string(id.begin(), id.end()));
        if (hit == by_id.end()) continue;
        for (std::size_t i : hit->second) {
          const Sighting& s = attacker.recorded[i];
          if (s.nearby.size() == 1 && target_set.contains(s.nearby.front())) identified.insert(s.nearby.front());
        }
      }
    }
  }
  return {identified.begin(), identified.end()};
}

std::vector<UserId> atk_targeted_identification_mediated(const AttackerState& attacker,
                                                         const std::vector<UserId>& targets,
                                                         std::size_t notifications) {
  if (notifications == 0) return {};
  std::set<UserId> candidates;
  for (const Sighting& s : attacker.recorded) candidates.insert(s.nearby.begin(), s.nearby.end());
  if (candidates.size() != 1) return {};
  const UserId only = *candidates.begin();
  if (std::find(targets.begin(), targets.end(), only) == targets.end()) return {};
  return {only};
}

std::vector<LinkedSighting> atk_linkability(const AttackerState& attacker, const DailyKey& leaked,
                                            std::int64_t last_day, std::size_t ids_per_day) {
  std::unordered_map<std::string, std::vector<std::size_t>> by_id;
  for (std::size_t i = 0; i < attacker.recorded.size(); ++i) by_id[id_key(attacker.recorded[i].id)].push_back(i);
  std::vector<LinkedSighting> out;
  for (DailyKey k = leaked; k.day <= last_day; k = dp3t_next_key(k)) {
    for (const EphemeralId& id : dp3t_ids(k, ids_per_day)) {
      auto hit = by_id.find(std::string(id.begin(), id.end()));
      if (hit == by_id.end()) continue;
      for (std::size_t i : hit->second) out.push_back({i, k.day});
    }
  }
  std::sort(out.begin(), out.end(), [](const LinkedSighting& a, const LinkedSighting& b) { return a.sighting < b.sighting; });
  return out;
}

std::string to_string(ForgeEdit::Kind k) {
  switch (k) {
    case ForgeEdit::Kind::kDeleteAll:
      return "delete_all";
    case ForgeEdit::Kind::kDelete:
      return "delete";
    case ForgeEdit::Kind::kInjectRandom:
      return "inject_random";
    case ForgeEdit::Kind::kInjectReplay:
      return "inject_replay";
  }
  return "unknown";
}

ForgeEdit::Kind forge_kind_from_string(const std::string& s) {
  for (auto k : {ForgeEdit::Kind::kDeleteAll, ForgeEdit::Kind::kDelete, ForgeEdit::Kind::kInjectRandom,
                 ForgeEdit::Kind::kInjectReplay}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown forge action '" + s + "'");
}

}  // namespace tracebench
