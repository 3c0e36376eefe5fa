#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "tracebench/crypto.hpp"
#include "tracebench/party_view.hpp"
#include "tracebench/world.hpp"

namespace tracebench {

struct DailyKey {
  std::int64_t day = 0;
  Digest key;
  bool operator==(const DailyKey&) const = default;
};

using EphemeralId = Block16;

inline constexpr std::size_t kDefaultEphIdsPerDay = 96;
inline constexpr Seconds kCoarseTimeS = kSecondsPerDay / 2;
inline constexpr std::int64_t kDefaultMatchHorizonDays = 14;
inline constexpr std::string_view kBroadcastKeyLabel = "broadcast key";

DailyKey dp3t_init(RandomStream& rand);
DailyKey dp3t_next_key(const DailyKey& k);

/// The n ids of a day: prg(prf(key, "broadcast key"), n).
std::vector<EphemeralId> dp3t_ids(const DailyKey& k, std::size_t n);

struct DayBroadcast {
  std::vector<EphemeralId> ids;
  /// Slot s broadcasts ids[order[s]].
  std::vector<std::size_t> order;
};

DayBroadcast dp3t_ephids(const DailyKey& k, std::size_t n, RandomStream& order_rand);

/// Half-day bucket of a timestamp; the only time an honest store keeps.
std::int64_t coarse_time_of(Seconds t);

struct DP3TObservation {
  EphemeralId ephid{};
  SignalStrength proximity;
  Seconds duration_s = 0;
  /// Proximity class at sensing time: 1 when at or above the near threshold.
  std::uint8_t aux = 0;
  std::int64_t coarse_time = 0;
  Origin origin = Origin::kGenuine;
};

struct DP3TDevice {
  UserId owner;
  std::size_t ids_per_day = kDefaultEphIdsPerDay;
  DailyKey current;
  /// Keys of the current chain epoch by day.
  std::map<std::int64_t, DailyKey> history;
  std::uint64_t epoch = 0;
  std::optional<std::uint64_t> reported_epoch;
  /// Fresh key installed on the next day boundary after a report.
  std::optional<Digest> pending_rotation;
  DayBroadcast today;
  std::vector<DP3TObservation> store;
  std::map<std::tuple<EphemeralId, std::uint8_t, std::int64_t>, std::size_t> index;
};

DP3TDevice dp3t_device(UserId owner, std::size_t ids_per_day, RandomStream& rand);

/// Moves the device to `day` (hash-chaining or installing a pending fresh
/// key) and draws that day's broadcast order.
void dp3t_start_day(DP3TDevice& device, std::int64_t day, RandomStream& order_rand);

/// EphID broadcast at time t of the device's current day.
const EphemeralId& dp3t_current_id(const DP3TDevice& device, Seconds t);

/// Aggregates hearings of `event` by the owner into the store, one
/// observation per (ephid, proximity class, half-day).
void dp3t_on_hear(DP3TDevice& device, const BroadcastEvent& event, Seconds tick_s, double near_rssi_dbm);

struct Publication {
  Bytes opaque;  // random per publication, unlinkable to the reporter
  Digest sk;
  std::int64_t start_day = 0;
  std::optional<std::int64_t> end_day;  // inclusive; open for a live chain
};

struct BackendState {
  std::vector<Publication> published;
  PartyView view{"backend"};
};

/// Publishes SK at `start_day` (ending on `report_day`) and schedules a
/// fresh key from report_day + 1. When `publish_rotated` is set the fresh
/// key is published too. A second report in the same epoch is a no-op and
/// returns no publications.
std::vector<Publication> dp3t_report(DP3TDevice& device, BackendState& backend, std::int64_t start_day,
                                     std::int64_t report_day, RandomStream& rand, bool publish_rotated,
                                     std::uint64_t event_id = 0);

struct DP3TMatch {
  std::size_t observation = 0;  // index into the store
  std::int64_t day = 0;
};

/// Derives every day in [start_day, start_day + horizon_days), capped at the
/// publication's end_day, and intersects the expanded ids with the store.
std::vector<DP3TMatch> dp3t_match(const std::vector<DP3TObservation>& store, const Publication& publication,
                                  std::int64_t horizon_days, std::size_t ids_per_day = kDefaultEphIdsPerDay);

/// One JSON Lines record per publication.
std::string publication_to_json(const Publication& p);

}  // namespace tracebench
