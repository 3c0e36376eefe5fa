#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "tracebench/proto_dp3t.hpp"
#include "tracebench/world.hpp"

namespace tracebench {

// ---------------------------------------------------------------------------
// Relay

struct RelayLink {
  GeoPoint endpoint_a;
  GeoPoint endpoint_b;
  double range_m = 10.0;
  std::size_t latency_ticks = 0;
};

/// Throws ConfigError unless the endpoints are farther apart than the radio
/// range and range_m is positive.
void validate(const RelayLink& link, const RadioModel& model);

/// A broadcast picked up at one endpoint, waiting to be re-emitted at the
/// other.
struct RelayCapture {
  UserId sender;
  Bytes payload;
  bool to_b = true;
};

/// Genuine broadcasts whose sender is within range of either endpoint.
std::vector<RelayCapture> atk_relay_capture(const RelayLink& link, const std::vector<BroadcastEvent>& events,
                                            const std::map<UserId, GeoPoint>& positions);

/// Re-emits captures at the opposite endpoint; hearers are the users within
/// range of that endpoint other than the original sender.
std::vector<BroadcastEvent> atk_relay_emit(const RelayLink& link, const std::vector<RelayCapture>& captures,
                                           const std::map<UserId, GeoPoint>& positions, Seconds now,
                                           const RadioModel& model, RandomStream& rand);

/// Zero-latency relay of one tick.
std::vector<BroadcastEvent> atk_relay(const RelayLink& link, const std::vector<BroadcastEvent>& events,
                                      const std::map<UserId, GeoPoint>& positions, const RadioModel& model,
                                      RandomStream& rand);

/// Delay line for relays with latency_ticks > 0.
class RelayState {
 public:
  explicit RelayState(RelayLink link) : link_(std::move(link)) {}
  const RelayLink& link() const { return link_; }
  /// Captures this tick's broadcasts and emits whatever is due.
  std::vector<BroadcastEvent> step(const std::vector<BroadcastEvent>& events,
                                   const std::map<UserId, GeoPoint>& positions, Seconds now, const RadioModel& model,
                                   RandomStream& rand);

 private:
  RelayLink link_;
  std::deque<std::vector<RelayCapture>> pending_;
};

// ---------------------------------------------------------------------------
// Range extender

inline constexpr double kExtenderRssiDbm = -60.0;

struct RangeExtender {
  GeoPoint center;
  double radius_m = 50.0;
  double rssi_dbm = kExtenderRssiDbm;
};

/// Throws ConfigError unless radius_m exceeds the radio range.
void validate(const RangeExtender& ext, const RadioModel& model);

/// Every genuine broadcast from inside the radius is heard by every other
/// user inside the radius at ext.rssi_dbm.
std::vector<BroadcastEvent> atk_range_extender(const RangeExtender& ext, const std::vector<BroadcastEvent>& events,
                                               const std::map<UserId, GeoPoint>& positions);

// ---------------------------------------------------------------------------
// Recording attacker

/// What an attacker kept of one broadcast. Unlike honest stores the time is
/// precise.
struct Sighting {
  Bytes id;
  Seconds time_s = 0;
  GeoPoint place;
  SignalStrength rssi;
  /// Simulator ground truth, used only to score findings.
  UserId sender;
  /// Users the attacker could see around it at that moment.
  std::vector<UserId> nearby;
};

struct AttackerState {
  std::vector<UserId> controlled_nodes;
  std::vector<GeoPoint> sensors;
  std::vector<Sighting> recorded;
  std::vector<std::string> conclusions;
};

/// Records every broadcast heard by `node`, together with the users within
/// `sight_m` of it.
void atk_record_node(AttackerState& attacker, UserId node, const std::vector<BroadcastEvent>& events,
                     const std::map<UserId, GeoPoint>& positions, double sight_m);

/// Records every broadcast whose sender is within `range_m` of a stationary
/// sensor.
void atk_record_sensors(AttackerState& attacker, const std::vector<BroadcastEvent>& events,
                        const std::map<UserId, GeoPoint>& positions, double range_m, const RadioModel& model);

/// DP-3T: a recorded id that derives from a publication identifies its
/// sender when exactly one user, a target, was near the attacker.
std::vector<UserId> atk_targeted_identification(const AttackerState& attacker, const std::vector<UserId>& targets,
                                                const std::vector<Publication>& publications,
                                                std::int64_t horizon_days, std::size_t ids_per_day);

/// TraceTogether observer: the MoH notification carries neither time nor
/// identity, so the candidate set is everyone the attacker ever saw.
std::vector<UserId> atk_targeted_identification_mediated(const AttackerState& attacker,
                                                         const std::vector<UserId>& targets,
                                                         std::size_t notifications);

struct LinkedSighting {
  std::size_t sighting = 0;  // index into attacker.recorded
  std::int64_t day = 0;
};

/// Derives the victim's ids from `leaked` for every day up to `last_day`
/// and links every recorded sighting of them.
std::vector<LinkedSighting> atk_linkability(const AttackerState& attacker, const DailyKey& leaked,
                                            std::int64_t last_day, std::size_t ids_per_day);

// ---------------------------------------------------------------------------
// Store forgery

struct ForgeEdit {
  enum class Kind { kDeleteAll, kDelete, kInjectRandom, kInjectReplay };
  Kind kind = Kind::kDeleteAll;
  std::size_t index = 0;  // kDelete
  std::size_t count = 1;  // injected records
  UserId peer;            // kInjectReplay
  Seconds at_s = 0;       // kInjectReplay
};

std::string to_string(ForgeEdit::Kind k);
ForgeEdit::Kind forge_kind_from_string(const std::string& s);

struct ForgeOutcome {
  std::size_t deleted = 0;
  std::size_t injected = 0;
};

/// Applies `edits` in order. `make_random` and `make_replay` build a
/// fabricated record; replays copy a genuine identifier of ed.peer observed at
/// ed.at_s. Injected records are tagged Origin::kForged by the builders.
template <typename Record>
ForgeOutcome atk_forge_store(std::vector<Record>& store, const std::vector<ForgeEdit>& edits,
                             const std::function<Record()>& make_random,
                             const std::function<std::optional<Record>(const ForgeEdit&)>& make_replay) {
  ForgeOutcome out;
  for (const ForgeEdit& e : edits) {
    switch (e.kind) {
      case ForgeEdit::Kind::kDeleteAll:
        out.deleted += store.size();
        store.clear();
        break;
      case ForgeEdit::Kind::kDelete:
        if (e.index < store.size()) {
          store.erase(store.begin() + static_cast<std::ptrdiff_t>(e.index));
          ++out.deleted;
        }
        break;
      case ForgeEdit::Kind::kInjectRandom:
        for (std::size_t i = 0; i < e.count; ++i) store.push_back(make_random());
        out.injected += e.count;
        break;
      case ForgeEdit::Kind::kInjectReplay:
        for (std::size_t i = 0; i < e.count; ++i) {
          auto r = make_replay(e);
          if (!r) break;
          store.push_back(std::move(*r));
          ++out.injected;
        }
        break;
    }
  }
  return out;
}

}  // namespace tracebench
