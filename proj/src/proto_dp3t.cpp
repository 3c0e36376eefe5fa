#include "tracebench/proto_dp3t.hpp"

#include <algorithm>
#include <unordered_map>

#include "json.hpp"

namespace tracebench {

namespace {

struct IdHash {
  std::size_t operator()(const EphemeralId& id) const {
    std::size_t h = 0;
    for (int i = 0; i < 8; ++i) h = (h << 8) | id[i];
    return h;
  }
};

}  // namespace

DailyKey dp3t_init(RandomStream& rand) {
  DailyKey k;
  k.day = 0;
  k.key.bytes = rand.array<32>();
  return k;
}

DailyKey dp3t_next_key(const DailyKey& k) { return {k.day + 1, hash(k.key.view())}; }

std::vector<EphemeralId> dp3t_ids(const DailyKey& k, std::size_t n) {
  return prg(prf(k.key, kBroadcastKeyLabel), n);
}

DayBroadcast dp3t_ephids(const DailyKey& k, std::size_t n, RandomStream& order_rand) {
  return {dp3t_ids(k, n), order_rand.permutation(n)};
}

std::int64_t coarse_time_of(Seconds t) {
  return t >= 0 ? t / kCoarseTimeS : -((-t + kCoarseTimeS - 1) / kCoarseTimeS);
}

DP3TDevice dp3t_device(UserId owner, std::size_t ids_per_day, RandomStream& rand) {
  if (ids_per_day == 0 || kSecondsPerDay % static_cast<Seconds>(ids_per_day) != 0) {
    throw ConfigError("ids_per_day must divide the day evenly");
  }
  DP3TDevice d;
  d.owner = owner;
  d.ids_per_day = ids_per_day;
  d.current = dp3t_init(rand);
  d.history[0] = d.current;
  return d;
}

void dp3t_start_day(DP3TDevice& device, std::int64_t day, RandomStream& order_rand) {
  if (day < device.current.day) throw ArgumentError("device days only move forward");
  if (day > device.current.day || device.today.ids.empty()) {
    if (device.pending_rotation && day > device.current.day) {
      device.current = {day, *device.pending_rotation};
      device.pending_rotation.reset();
      device.history.clear();
      ++device.epoch;
    }
    while (device.current.day < day) device.current = dp3t_next_key(device.current);
    device.history[day] = device.current;
  }
  device.today = dp3t_ephids(device.current, device.ids_per_day, order_rand);
}

const EphemeralId& dp3t_current_id(const DP3TDevice& device, Seconds t) {
  const Seconds slot_len = kSecondsPerDay / static_cast<Seconds>(device.ids_per_day);
  const auto slot = static_cast<std::size_t>((t % kSecondsPerDay) / slot_len);
  return device.today.ids.at(device.today.order.at(slot));
}

void dp3t_on_hear(DP3TDevice& device, const BroadcastEvent& event, Seconds tick_s, double near_rssi_dbm) {
  if (event.payload.size() != std::tuple_size_v<EphemeralId>) return;
  EphemeralId id{};
  std::copy(event.payload.begin(), event.payload.end(), id.begin());
  const std::int64_t coarse = coarse_time_of(event.time_s);
  for (const Hearing& h : event.heard_by) {
    if (h.user != device.owner) continue;
    const std::uint8_t aux = h.rssi.rssi_dbm >= near_rssi_dbm ? 1 : 0;
    auto [it, fresh] = device.index.try_emplace({id, aux, coarse}, device.store.size());
    if (fresh) {
      device.store.push_back({id, h.rssi, tick_s, aux, coarse, event.origin});
      continue;
    }
    DP3TObservation& o = device.store[it->second];
    o.duration_s += tick_s;
    if (h.rssi > o.proximity) o.proximity = h.rssi;
    // A genuine sighting outweighs an adversarial one of the same id.
    if (event.origin == Origin::kGenuine) o.origin = Origin::kGenuine;
  }
}

std::vector<Publication> dp3t_report(DP3TDevice& device, BackendState& backend, std::int64_t start_day,
                                     std::int64_t report_day, RandomStream& rand, bool publish_rotated,
                                     std::uint64_t event_id) {
  if (device.reported_epoch == device.epoch) return {};
  if (start_day > report_day) throw ArgumentError("infectious start day after report day");
  auto it = device.history.lower_bound(start_day);
  if (it == device.history.end()) throw ProtocolError("no daily key retained for day " + std::to_string(start_day));
  // Keys older than the epoch are gone; publish from the earliest kept day.
  const DailyKey& first = it->second;

  std::vector<Publication> out;
  out.push_back({rand.bytes(16), first.key, first.day, report_day});
  Digest fresh;
  fresh.bytes = rand.array<32>();
  device.pending_rotation = fresh;
  device.reported_epoch = device.epoch;
  if (publish_rotated) out.push_back({rand.bytes(16), fresh, report_day + 1, std::nullopt});

  for (const Publication& p : out) {
    backend.published.push_back(p);
    backend.view.learn(FactKind::kKeyMaterial, "sk:" + to_hex(p.opaque), event_id);
    backend.view.learn(FactKind::kTimestamp, "published:" + to_hex(p.opaque) + "@" + std::to_string(report_day),
                       event_id);
  }
  return out;
}

std::vector<DP3TMatch> dp3t_match(const std::vector<DP3TObservation>& store, const Publication& publication,
                                  std::int64_t horizon_days, std::size_t ids_per_day) {
  std::vector<DP3TMatch> out;
  if (store.empty() || horizon_days <= 0) return out;
  std::unordered_map<EphemeralId, std::vector<std::size_t>, IdHash> by_id;
  for (std::size_t i = 0; i < store.size(); ++i) by_id[store[i].ephid].push_back(i);

  std::int64_t last = publication.start_day + horizon_days - 1;
  if (publication.end_day) last = std::min(last, *publication.end_day);
  DailyKey k{publication.start_day, publication.sk};
  for (; k.day <= last; k = dp3t_next_key(k)) {
    for (const EphemeralId& id : dp3t_ids(k, ids_per_day)) {
      auto hit = by_id.find(id);
      if (hit == by_id.end()) continue;
      for (std::size_t idx : hit->second) out.push_back({idx, k.day});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const DP3TMatch& a, const DP3TMatch& b) { return a.observation < b.observation; });
  return out;
}

std::string publication_to_json(const Publication& p) {
  nlohmann::json j{{"opaque", to_hex(p.opaque)}, {"sk", to_hex(p.sk.view())}, {"start_day", p.start_day}};
  j["end_day"] = p.end_day ? nlohmann::json(*p.end_day) : nlohmann::json(nullptr);
  return j.dump();
}

}  // namespace tracebench
